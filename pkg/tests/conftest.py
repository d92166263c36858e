import numpy as np
import pytest
from scipy import stats


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def chi2_uniform_pvalue(counts):
    return stats.chisquare(np.asarray(counts, dtype=float)).pvalue


def two_sample_pvalue(counter_a, counter_b):
    keys = sorted(set(counter_a) | set(counter_b))
    table = np.array([[counter_a.get(k, 0) for k in keys], [counter_b.get(k, 0) for k in keys]])
    if table.shape[1] < 2:
        return 1.0
    return stats.chi2_contingency(table)[1]
