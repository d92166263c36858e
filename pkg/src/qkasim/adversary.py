"""Adversaries: a dishonest Alice who lies about the Step 7 permutation, and
an intercept-resend eavesdropper on the quantum channel."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backends import Backend
from .logical import Basis
from .protocol import Adversary, Permutation, ProtocolConfig, RunOutcome, run_protocol
from .symbolic import DibitString, final_key


@dataclass(frozen=True)
class AttackGoal:
    target_final_key: str | None = None
    target_ka_prime: DibitString | None = None

    def __post_init__(self):
        if (self.target_final_key is None) == (self.target_ka_prime is None):
            raise ValueError("give exactly one of target_final_key and target_ka_prime")
        if self.target_final_key is not None:
            key = self.target_final_key.replace(" ", "")
            if len(key) % 4 or set(key) - {"0", "1"}:
                raise ValueError(f"final key must be a bit string of length 4n: {self.target_final_key!r}")
            object.__setattr__(self, "target_final_key", key)

    @property
    def n(self) -> int:
        if self.target_ka_prime is not None:
            return len(self.target_ka_prime)
        return len(self.target_final_key) // 4


@dataclass(frozen=True)
class AttackResult:
    feasible: bool
    fake_perm: Permutation | None = None
    predicted_bob_key: str | None = None
    target_ka_prime: DibitString | None = None

    def __post_init__(self):
        if self.feasible and (self.fake_perm is None or self.predicted_bob_key is None):
            raise ValueError("a feasible attack needs a permutation and a predicted key")

    def to_payload(self) -> dict:
        return {
            "feasible": self.feasible,
            "fake_perm": list(self.fake_perm.mapping) if self.fake_perm is not None else None,
            "predicted_bob_key": self.predicted_bob_key,
        }


def target_ka_prime(goal: AttackGoal, kb: DibitString, m: DibitString) -> DibitString | None:
    """K'_A implied by the goal, or None when the target key is unreachable
    because its second half is not its first half xor M."""
    if goal.target_ka_prime is not None:
        return goal.target_ka_prime
    key = goal.target_final_key
    half = len(key) // 2
    first, second = DibitString.parse(key[:half]), DibitString.parse(key[half:])
    if len(first) != len(m):
        return None
    if first ^ m != second:
        return None
    return first ^ kb


def craft_fake_permutation(goal: AttackGoal, ka: DibitString, kb: DibitString, m: DibitString,
                           used_perm: Permutation) -> AttackResult:
    """Find the announcement that makes Bob decode K'_A in the original protocol.

    Bob's i-th result is the code of the pair sitting at ``announced(i)`` in
    the transmitted order, so announcing ``used o sigma`` hands him
    ``(K_A xor M)[sigma(i)]``. A match exists exactly when the target codes
    are a rearrangement of the true ones; ties go to the lexicographically
    smallest announcement.
    """
    ka_prime = target_ka_prime(goal, kb, m)
    if ka_prime is None or len(ka_prime) != len(ka):
        return AttackResult(False)
    true_codes = ka ^ m
    wanted = ka_prime ^ m
    if Counter(true_codes) != Counter(wanted):
        return AttackResult(False, target_ka_prime=ka_prime)
    available = set(range(len(ka)))
    sigma = []
    for j, code in enumerate(wanted):
        # any source with the right code keeps the rest solvable, so greedy is exact
        i = min((i for i in available if true_codes[i] == code), key=lambda i: used_perm(i))
        available.remove(i)
        sigma.append(i)
    fake = used_perm.compose(Permutation(tuple(sigma)))
    return AttackResult(True, fake, final_key(ka_prime, kb, m), ka_prime)


def displacement(announced: Permutation, used: Permutation) -> Permutation:
    """``sigma`` with ``announced = used o sigma``; Bob's slot i receives pair sigma(i)."""
    return used.inverse().compose(announced)


class PermutationAttacker(Adversary):
    """Alice announces a crafted permutation after learning K_B in Step 6.

    With ``goal`` the permutation is crafted for the original protocol. With
    ``shuffle`` a fixed rearrangement ``sigma`` of the pairs is announced
    instead, and the target is whatever that announcement yields in the
    original protocol.
    """

    def __init__(self, goal: AttackGoal | None = None, shuffle: Permutation | None = None):
        if (goal is None) == (shuffle is None):
            raise ValueError("give exactly one of goal and shuffle")
        self.goal = goal
        self.shuffle = shuffle
        self._result: AttackResult | None = None

    def announce_permutation(self, session) -> Permutation | None:
        ka, kb, m = session.ka, session.kb_derived, session.m_alice
        if self.goal is not None:
            self._result = craft_fake_permutation(self.goal, ka, kb, m, session.used_perm)
        else:
            codes = ka ^ m
            ka_prime = DibitString(tuple(codes[j] for j in self.shuffle.mapping)) ^ m
            fake = session.used_perm.compose(self.shuffle)
            self._result = AttackResult(True, fake, final_key(ka_prime, kb, m), ka_prime)
        return self._result.fake_perm if self._result.feasible else None

    def alice_final_key(self, session) -> str | None:
        if self._result is not None and self._result.feasible:
            return self._result.predicted_bob_key
        return None

    def result(self) -> AttackResult | None:
        return self._result


def intercept_resend(transmission: Sequence[int], backend: Backend, rng: np.random.Generator) -> list[Basis]:
    """Eve measures every logical particle in a random basis and forwards the
    collapsed state. Returns her basis choices."""
    bases = []
    for particle in transmission:
        basis = Basis.Z if rng.integers(0, 2) == 0 else Basis.X
        backend.measure_single(particle, basis)
        bases.append(basis)
    return bases


class InterceptResend(Adversary):
    def __init__(self, transmissions: Sequence[int] = (1, 2)):
        self.transmissions = tuple(transmissions)

    def tamper(self, transmission, sequence, backend, rng) -> None:
        if transmission in self.transmissions:
            intercept_resend(sequence, backend, rng)


def attack_run(config: ProtocolConfig, ka: DibitString, kb: DibitString, goal: AttackGoal,
               run_index: int = 0, script=None) -> tuple[RunOutcome, AttackResult]:
    """Original protocol with Alice announcing a fake permutation for ``goal``."""
    if config.improved:
        raise ValueError("attack_run targets the original protocol; use attack_run_improved")
    attacker = PermutationAttacker(goal)
    outcome = run_protocol(config, ka, kb, attacker, run_index=run_index, script=script)
    return outcome, attacker.result() or AttackResult(False)
