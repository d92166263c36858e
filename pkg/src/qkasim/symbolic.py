"""Classical shadow of the logical layer.

Bell states are tracked by their 2-bit codes, logical unitaries act by XOR
and entanglement swapping is sampled directly from its outcome law.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .logical import BellCode


@dataclass(frozen=True)
class DibitString:
    """Sequence of 2-bit symbols, written most significant dibit first."""

    dibits: tuple[int, ...]

    def __post_init__(self):
        dibits = tuple(int(d) for d in self.dibits)
        if any(not 0 <= d <= 3 for d in dibits):
            raise ValueError(f"dibits must be in 0..3: {dibits}")
        object.__setattr__(self, "dibits", dibits)

    @classmethod
    def parse(cls, bits: str) -> "DibitString":
        bits = bits.replace(" ", "")
        if len(bits) % 2 or set(bits) - {"0", "1"}:
            raise ValueError(f"not a dibit string: {bits!r}")
        return cls(tuple(int(bits[i:i + 2], 2) for i in range(0, len(bits), 2)))

    @classmethod
    def zeros(cls, n: int) -> "DibitString":
        return cls((0,) * n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "DibitString":
        return cls(tuple(int(v) for v in rng.integers(0, 4, size=n)))

    def __len__(self):
        return len(self.dibits)

    def __iter__(self):
        return iter(self.dibits)

    def __getitem__(self, i):
        return self.dibits[i]

    def __xor__(self, other: "DibitString") -> "DibitString":
        return xor(self, other)

    @property
    def bits(self) -> str:
        return "".join(format(d, "02b") for d in self.dibits)

    def grouped(self) -> str:
        return " ".join(format(d, "02b") for d in self.dibits)

    def __str__(self):
        return self.bits


def unitary_action(u: int, b: int) -> BellCode:
    return BellCode(int(b) ^ int(u))


def entanglement_swap(is1: int, is2: int, rng: np.random.Generator,
                      mr1: int | None = None) -> tuple[BellCode, BellCode]:
    """Outcomes of Bell-measuring both first and both second particles of two
    Bell pairs in states ``is1`` and ``is2``.

    The first result is uniform; ``mr1`` pins it (for scripted runs).
    """
    if mr1 is None:
        mr1 = int(rng.integers(0, 4))
    return BellCode(mr1), BellCode(int(mr1) ^ int(is1) ^ int(is2))


def xor(a: DibitString, b: DibitString) -> DibitString:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return DibitString(tuple(x ^ y for x, y in zip(a, b)))


def final_key(ka: DibitString, kb: DibitString, m: DibitString) -> str:
    """(K_A xor K_B) || (K_A xor K_B xor M) as a bit string of length 4n."""
    if not len(ka) == len(kb) == len(m):
        raise ValueError("key halves and M must have equal length")
    shared = ka ^ kb
    return shared.bits + (shared ^ m).bits


def dibits(values: Iterable[int]) -> DibitString:
    return DibitString(tuple(values))
