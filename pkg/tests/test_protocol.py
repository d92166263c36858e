from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import chi2_uniform_pvalue, two_sample_pvalue
from qkasim.backends import StateVectorBackend, SymbolicBackend, make_backend
from qkasim.logical import Basis, BellCode, LogicalSymbol, NoiseModel
from qkasim.protocol import (
    ConfigError, DecoyPlan, Permutation, ProtocolConfig, ProtocolOrderError, QKASession, Status,
    decoy_check, insert_decoys, run_protocol, run_rng, step4_encode, step6_announce, step7_decode,
)
from qkasim.symbolic import DibitString, final_key

BACKENDS = ["symbolic", "statevector"]


def D(bits):
    return DibitString.parse(bits)


def backend(kind, seed=0, model="dp"):
    return make_backend(kind, model, np.random.default_rng(seed))


# -- permutations ---------------------------------------------------------

perms = st.integers(1, 8).flatmap(lambda n: st.permutations(range(n))).map(lambda p: Permutation(tuple(p)))


@given(perms)
def test_permutation_inverse(p):
    assert p.inverse().compose(p).is_identity()
    assert p.compose(p.inverse()).is_identity()
    seq = list("abcdefgh"[: len(p)])
    assert p.undo(p.apply(seq)) == seq


@given(perms, st.data())
def test_permutation_compose_apply(p, data):
    q = Permutation(tuple(data.draw(st.permutations(range(len(p))))))
    seq = list(range(len(p)))
    assert p.compose(q).apply(seq) == p.apply(q.apply(seq))


def test_permutation_validation_and_cycles():
    with pytest.raises(ValueError):
        Permutation((0, 0, 1))
    assert Permutation((1, 0, 2)).cycles() == [(0, 1)]
    assert Permutation((1, 2, 0, 3)).cycles() == [(0, 1, 2)]
    assert Permutation.identity(3).cycles() == []


# -- config ----------------------------------------------------------------

def test_config_defaults_and_validation():
    assert ProtocolConfig(4).decoy_count == 8
    assert ProtocolConfig(20).decoy_count == 20
    assert ProtocolConfig(2, noise="r").noise is NoiseModel.ROTATION
    for bad in [dict(n=0), dict(n=2, decoy_count=-1), dict(n=2, error_threshold=1.5),
                dict(n=2, backend="gpu"), dict(n=2, seed=-1)]:
        with pytest.raises(ConfigError):
            ProtocolConfig(**bad)


# -- step 1 / decoys ---------------------------------------------------------

@pytest.mark.parametrize("kind", BACKENDS)
def test_step1_prepares_phi_plus_pairs(kind):
    session = QKASession(ProtocolConfig(1, backend=kind, decoy_count=0), D("00"), D("00"))
    session.step1()
    assert len(session.pairs) == 2
    assert session._inflight == [second for _, second in session.pairs]
    if kind == "symbolic":
        assert all(session.backend.code_of(first) is BellCode.PHI_PLUS for first, _ in session.pairs)
    else:
        for first, _ in session.pairs:
            state, members = session.backend.state_of(first)
            assert len(members) == 2


def test_insert_decoys_positions(rng):
    b = backend("symbolic")
    seq = list(range(100, 110))
    out, plan = insert_decoys(seq, 5, b, rng)
    assert len(out) == 15
    assert [p for i, p in enumerate(out) if i not in plan.positions] == seq
    out0, plan0 = insert_decoys(seq, 0, b, rng)
    assert out0 == seq and plan0.positions == ()


@pytest.mark.parametrize("kind", BACKENDS)
def test_decoy_check_noiseless(kind, rng):
    b = backend(kind)
    seq = [b.bell_pair(0)[1] for _ in range(4)]
    out, plan = insert_decoys(seq, 12, b, rng)
    b.transmit(out, 1.234)
    check = decoy_check(plan, out, b, 0.0)
    assert check.error_rate == 0 and check.passed and check.stripped == seq


def test_decoy_check_empty_and_collisions():
    b = backend("symbolic")
    check = decoy_check(DecoyPlan((), ()), [1, 2], b, 0.0)
    assert check.passed and check.error_rate == 0 and check.stripped == [1, 2]
    d = b.decoy(LogicalSymbol.ZERO)
    with pytest.raises(ValueError):
        decoy_check(DecoyPlan((0, 0), (LogicalSymbol.ZERO, LogicalSymbol.ZERO)), [d], b, 0.0)


# -- step 3 ------------------------------------------------------------------

@pytest.mark.parametrize("kind", BACKENDS)
@pytest.mark.parametrize("model", ["dp", "r"])
def test_step3_m_agrees(kind, model):
    for i in range(20):
        s = QKASession(ProtocolConfig(3, noise=model, backend=kind), D("000000"), D("000000"), rng=run_rng(1, i))
        s.step1()
        s.step2()
        s.step3()
        assert s.m_alice == s.m_bob


def step3_sample(kind, runs, alice_first=True):
    counts = Counter()
    for i in range(runs):
        b = make_backend(kind, "dp", run_rng(99, i))
        p1, p2 = b.bell_pair(0), b.bell_pair(0)
        if alice_first:
            ma = b.bell_measure(p1[0], p2[0])
            mb = b.bell_measure(p1[1], p2[1])
        else:
            mb = b.bell_measure(p1[1], p2[1])
            ma = b.bell_measure(p1[0], p2[0])
        counts[(int(ma), int(mb))] += 1
    return counts


def test_step3_distribution_uniform_symbolic():
    counts = step3_sample("symbolic", 10_000)
    assert all(a == b for a, b in counts)
    assert chi2_uniform_pvalue([counts[(c, c)] for c in range(4)]) > 0.01


def test_step3_backends_and_order_agree():
    sym = step3_sample("symbolic", 2_000)
    phys = step3_sample("statevector", 2_000)
    phys_rev = step3_sample("statevector", 2_000, alice_first=False)
    assert all(a == b for a, b in phys)
    assert two_sample_pvalue(sym, phys) > 0.01
    assert two_sample_pvalue(phys, phys_rev) > 0.01


# -- steps 4, 6, 7 -------------------------------------------------------------

@pytest.mark.parametrize("kind", BACKENDS)
def test_step4_identity_encodes_m(kind):
    b = backend(kind)
    m = D("1101 0010")
    seq = step4_encode(DibitString.zeros(4), m, Permutation.identity(4), b)
    measured, ka = step7_decode(seq, Permutation.identity(4), m, b)
    assert measured == m and ka == DibitString.zeros(4)


@pytest.mark.parametrize("kind", BACKENDS)
def test_step4_codes_before_permutation(kind):
    b = backend(kind)
    seq = step4_encode(D("0011"), D("1110"), Permutation.identity(2), b)
    measured, ka = step7_decode(seq, Permutation.identity(2), D("1110"), b)
    assert measured == D("1101")
    assert ka == D("0011")


@pytest.mark.parametrize("kind", BACKENDS)
def test_step4_round_trip_with_permutation(kind, rng):
    for _ in range(10):
        n = 5
        ka, m = DibitString.random(n, rng), DibitString.random(n, rng)
        perm = Permutation.random(n, rng)
        b = backend(kind, int(rng.integers(1 << 30)))
        seq = step4_encode(ka, m, perm, b)
        measured, derived = step7_decode(seq, perm, m, b)
        assert measured == ka ^ m and derived == ka


def test_wrong_permutation_reshuffles_deterministically(rng):
    """Whole pairs stay intact, so a wrong announcement just reorders Bob's codes."""
    ka, m = D("00 01 10 11"), D("11 11 00 00")
    used, announced = Permutation((2, 0, 3, 1)), Permutation((0, 1, 2, 3))
    results = set()
    for seed in range(30):
        for kind in BACKENDS:
            b = backend(kind, seed)
            measured, _ = step7_decode(step4_encode(ka, m, used, b), announced, m, b)
            results.add(measured)
    assert len(results) == 1
    codes = ka ^ m
    sigma = used.inverse().compose(announced)
    assert results.pop() == DibitString(tuple(codes[sigma(i)] for i in range(4)))


def test_step6_announce():
    assert step6_announce(D("0110"), D("1110")) == D("1000")
    assert step6_announce(D("0110"), D("0110")) == D("0000")
    kb, m = D("011011"), D("110001")
    assert step6_announce(kb, m) ^ m == kb
    with pytest.raises(ValueError):
        step6_announce(D("01"), D("0110"))


# -- state machine -----------------------------------------------------------

def test_steps_must_run_in_order():
    s = QKASession(ProtocolConfig(2), D("0000"), D("0000"))
    with pytest.raises(ProtocolOrderError):
        s.step2()
    s.step1()
    s.step2()
    s.step3()
    s.step4()
    s.step5()
    with pytest.raises(ProtocolOrderError):
        s.step7()
    s.step6()
    with pytest.raises(ProtocolOrderError):
        s.step6()
    s.step7()
    s.step8()
    assert s.status is Status.AGREED


def test_aborted_session_refuses_more_steps():
    from qkasim.adversary import InterceptResend
    cfg = ProtocolConfig(2, decoy_count=40, error_threshold=0.0)
    s = QKASession(cfg, D("0000"), D("0000"), InterceptResend((1,)))
    s.step1()
    assert not s.step2()
    with pytest.raises(ProtocolOrderError):
        s.step3()
    out = s.outcome()
    assert out.status is Status.ABORTED_AT_DECOY_CHECK_1
    assert out.alice_final_key is None and out.bob_final_key is None


def test_transcript_step_order():
    out = run_protocol(ProtocolConfig(3), D("000111"), D("101010"))
    stages = out.transcript.stages()
    order = [f"step{i}" for i in range(1, 9)]
    assert [s for s in dict.fromkeys(stages)] == order
    announce = stages.index("step6")
    reveal = [i for i, e in enumerate(out.transcript) if e.kind == "permutation-reveal"][0]
    assert announce < reveal


def test_config_key_length_checked():
    with pytest.raises(ConfigError):
        run_protocol(ProtocolConfig(3), D("00"), D("000000"))


# -- whole runs --------------------------------------------------------------

@pytest.mark.parametrize("kind", BACKENDS)
@pytest.mark.parametrize("model", ["dp", "r"])
def test_honest_runs_agree(kind, model):
    rng = np.random.default_rng(3)
    for i in range(5):
        ka, kb = DibitString.random(16, rng), DibitString.random(16, rng)
        out = run_protocol(ProtocolConfig(16, noise=model, backend=kind), ka, kb, run_index=i)
        assert out.status is Status.AGREED
        assert out.alice_final_key == out.bob_final_key
        assert len(out.alice_final_key) == 64
        m = DibitString.parse(out.transcript.find("measurement", "step3", "alice")[0].payload["m"])
        assert out.alice_final_key == final_key(ka, kb, m)


def test_worked_instance_with_forced_m():
    out = run_protocol(ProtocolConfig(2), D("0011"), D("0110"), script=[0b11, 0b10])
    assert out.alice_final_key == out.bob_final_key == "01011011"


def test_runs_are_deterministic():
    cfg = ProtocolConfig(6, backend="statevector", noise="r")
    a = run_protocol(cfg, D("00" * 6), D("11" * 6), run_index=4).transcript.to_jsonl()
    b = run_protocol(cfg, D("00" * 6), D("11" * 6), run_index=4).transcript.to_jsonl()
    c = run_protocol(cfg, D("00" * 6), D("11" * 6), run_index=5).transcript.to_jsonl()
    assert a == b and a != c


def test_fairness_second_half_uniform():
    ka, kb = D("0110"), D("1100")
    cfg = ProtocolConfig(2, decoy_count=0)
    counts = Counter()
    for i in range(10_000):
        out = run_protocol(cfg, ka, kb, run_index=i)
        counts[out.bob_final_key[4:]] += 1
    assert len(counts) <= 16
    assert chi2_uniform_pvalue([counts.get(format(v, "04b"), 0) for v in range(16)]) > 0.01


@pytest.mark.parametrize("n", [1, 2, 4])
def test_backend_equivalence(n):
    rng = np.random.default_rng(n)
    ka, kb = DibitString.random(n, rng), DibitString.random(n, rng)
    views = {}
    for kind in BACKENDS:
        cfg = ProtocolConfig(n, backend=kind, decoy_count=4, seed=7 + n)
        views[kind] = Counter(run_protocol(cfg, ka, kb, run_index=i).bob_final_key for i in range(1_000))
    assert two_sample_pvalue(views["symbolic"], views["statevector"]) > 0.01


def test_backend_equivalence_under_eavesdropping():
    """Eve on both transmissions with a lenient threshold: agreement and key laws match."""
    from qkasim.adversary import InterceptResend
    ka, kb = D("0110"), D("1001")
    stats_by = {}
    for kind in BACKENDS:
        cfg = ProtocolConfig(2, backend=kind, decoy_count=2, error_threshold=1.0, seed=5)
        outs = [run_protocol(cfg, ka, kb, InterceptResend((1, 2)), run_index=i) for i in range(1_000)]
        stats_by[kind] = Counter((o.keys_match, o.bob_final_key) for o in outs)
    assert two_sample_pvalue(stats_by["symbolic"], stats_by["statevector"]) > 0.01


def test_statevector_registers_stay_small():
    cfg = ProtocolConfig(8, backend="statevector")
    s = QKASession(cfg, D("01" * 8), D("10" * 8))
    s.run()
    assert isinstance(s.backend, StateVectorBackend)
    assert s.backend.max_register_qubits <= 8


def test_symbolic_pair_halves_measured_by_eve():
    """Measuring half of Phi+ in Z leaves an even mixture of Phi+ and Phi- on the pair."""
    rng = np.random.default_rng(0)
    counts = Counter()
    for _ in range(4_000):
        b = SymbolicBackend("dp", rng)
        a, c = b.bell_pair(0)
        b.measure_single(c, Basis.Z)
        counts[int(b.bell_measure(a, c))] += 1
    assert set(counts) == {0, 1}
    assert stats.binomtest(counts[0], 4_000, 0.5).pvalue > 0.01
