"""Two-party quantum key agreement over a collective-noise channel.

``QKASession`` runs the eight protocol steps as a strict state machine;
``run_protocol`` drives a session from start to finish. The ``improved``
config flag switches Step 4 to permuting only the first logical particle
of every Bell pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backends import STATEVECTOR, SYMBOLIC, Backend, make_backend
from .logical import CODESPACE_LEAK, BellCode, LogicalSymbol, NoiseModel, sample_noise_parameter
from .symbolic import DibitString, final_key
from .transcript import ALICE, BOB, CHANNEL, PUBLIC, Transcript

DEFAULT_SEED = 20190074
DEFAULT_THRESHOLD = 0.05

# what the Step 4 permutation moves
WHOLE_PAIRS = "whole-pairs"
FIRST_PARTICLES = "first-particles"


class ConfigError(ValueError):
    pass


class ProtocolOrderError(RuntimeError):
    """A step was invoked out of sequence."""


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    noise: NoiseModel = NoiseModel.DEPHASING
    decoy_count: int | None = None
    error_threshold: float = DEFAULT_THRESHOLD
    backend: str = SYMBOLIC
    seed: int = DEFAULT_SEED
    improved: bool = False

    def __post_init__(self):
        object.__setattr__(self, "noise", NoiseModel(self.noise))
        if self.n < 1:
            raise ConfigError(f"n must be at least 1, got {self.n}")
        if self.decoy_count is None:
            object.__setattr__(self, "decoy_count", max(8, self.n))
        if self.decoy_count < 0:
            raise ConfigError("decoy_count must be non-negative")
        if not 0.0 <= self.error_threshold <= 1.0:
            raise ConfigError("error_threshold must lie in [0, 1]")
        if self.backend not in (SYMBOLIC, STATEVECTOR):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Permutation:
    """Bijection on positions: ``apply`` moves element ``i`` to ``mapping[i]``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(i) for i in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise ValueError(f"not a permutation: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(int(i) for i in rng.permutation(n)))

    def __len__(self):
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """``self o other``: apply ``other`` first."""
        if len(other) != len(self):
            raise ValueError("permutation sizes differ")
        return Permutation(tuple(self.mapping[other.mapping[i]] for i in range(len(self))))

    def apply(self, seq: Sequence) -> list:
        if len(seq) != len(self.mapping):
            raise ValueError("sequence length does not match permutation")
        out = [None] * len(seq)
        for i, item in enumerate(seq):
            out[self.mapping[i]] = item
        return out

    def undo(self, seq: Sequence) -> list:
        """Inverse of ``apply``."""
        if len(seq) != len(self.mapping):
            raise ValueError("sequence length does not match permutation")
        return [seq[j] for j in self.mapping]

    def cycles(self) -> list[tuple[int, ...]]:
        """Non-trivial cycles, each starting at its smallest element."""
        seen, out = set(), []
        for start in range(len(self.mapping)):
            if start in seen:
                continue
            cyc, i = [], start
            while i not in seen:
                seen.add(i)
                cyc.append(i)
                i = self.mapping[i]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.mapping))


class Status(str, enum.Enum):
    AGREED = "agreed"
    ABORTED_AT_DECOY_CHECK_1 = "aborted-at-decoy-check-1"
    ABORTED_AT_DECOY_CHECK_2 = "aborted-at-decoy-check-2"


@dataclass
class RunOutcome:
    status: Status
    alice_final_key: str | None
    bob_final_key: str | None
    transcript: Transcript
    attack: object | None = None

    def __post_init__(self):
        if self.status is Status.AGREED and (self.alice_final_key is None or self.bob_final_key is None):
            raise ValueError("an agreed run must carry both final keys")

    @property
    def aborted(self) -> bool:
        return self.status is not Status.AGREED

    @property
    def keys_match(self) -> bool:
        return not self.aborted and self.alice_final_key == self.bob_final_key


@dataclass(frozen=True)
class DecoyPlan:
    positions: tuple[int, ...]
    states: tuple[LogicalSymbol, ...]


@dataclass(frozen=True)
class DecoyCheck:
    errors: int
    count: int
    passed: bool
    stripped: list

    @property
    def error_rate(self) -> float:
        return self.errors / self.count if self.count else 0.0


class Adversary:
    """Hooks a protocol run exposes to an attacker. Defaults are honest."""

    def tamper(self, transmission: int, sequence: list[int], backend: Backend, rng: np.random.Generator) -> None:
        pass

    def announce_permutation(self, session: "QKASession") -> Permutation | None:
        return None

    def alice_final_key(self, session: "QKASession") -> str | None:
        return None

    def result(self):
        return None


def insert_decoys(sequence: list[int], count: int, backend: Backend,
                  rng: np.random.Generator) -> tuple[list[int], DecoyPlan]:
    """Insert ``count`` random logical decoys at uniformly random positions."""
    total = len(sequence) + count
    positions = tuple(sorted(int(p) for p in rng.choice(total, size=count, replace=False)))
    symbols = tuple(list(LogicalSymbol)[int(k)] for k in rng.integers(0, 4, size=count))
    out: list[int] = []
    rest = iter(sequence)
    decoys = iter(zip(positions, symbols))
    pending = next(decoys, None)
    for pos in range(total):
        if pending is not None and pending[0] == pos:
            out.append(backend.decoy(pending[1]))
            pending = next(decoys, None)
        else:
            out.append(next(rest))
    return out, DecoyPlan(positions, symbols)


def decoy_check(plan: DecoyPlan, received: list[int], backend: Backend, threshold: float) -> DecoyCheck:
    """Receiver measures each announced decoy in its basis and strips it."""
    if len(set(plan.positions)) != len(plan.positions):
        raise ValueError("decoy positions collide")
    if any(not 0 <= p < len(received) for p in plan.positions):
        raise ValueError("decoy position out of range")
    errors = 0
    for pos, state in zip(plan.positions, plan.states):
        outcome = backend.measure_single(received[pos], state.basis)
        if outcome == CODESPACE_LEAK or outcome is not state:
            errors += 1
        backend.discard(received[pos])
    decoy_set = set(plan.positions)
    stripped = [p for i, p in enumerate(received) if i not in decoy_set]
    count = len(plan.positions)
    passed = (errors / count if count else 0.0) <= threshold
    return DecoyCheck(errors, count, passed, stripped)


def _bell(backend: Backend, p: int, q: int) -> BellCode:
    outcome = backend.bell_measure(p, q)
    if outcome == CODESPACE_LEAK:
        raise ProtocolError("Bell measurement left the logical codespace")
    return outcome


def step4_encode(ka: DibitString, m: DibitString, perm: Permutation, backend: Backend,
                 scope: str = WHOLE_PAIRS) -> list[int]:
    """Alice's permuted S_C as a flat particle sequence (first, second, ...).

    Pair i is prepared in code m[i] and its first particle gets U_{ka[i]}.
    """
    if not len(ka) == len(m) == len(perm):
        raise ValueError("K_A, M and the permutation must have equal length")
    pairs = []
    for m_i, k_i in zip(m, ka):
        first, second = backend.bell_pair(m_i)
        backend.apply_unitary(k_i, first)
        pairs.append((first, second))
    if scope == FIRST_PARTICLES:
        firsts = perm.apply([f for f, _ in pairs])
        return [p for f, (_, s) in zip(firsts, pairs) for p in (f, s)]
    if scope != WHOLE_PAIRS:
        raise ValueError(f"unknown permutation scope {scope!r}")
    return [p for pair in perm.apply(pairs) for p in pair]


def step7_decode(received: list[int], announced: Permutation, m: DibitString, backend: Backend,
                 scope: str = WHOLE_PAIRS) -> tuple[DibitString, DibitString]:
    """Bob undoes ``announced``, Bell-measures slot by slot in ascending order
    and returns (measurements, derived K_A)."""
    firsts, seconds = received[0::2], received[1::2]
    if scope == FIRST_PARTICLES:
        slots = list(zip(announced.undo(firsts), seconds))
    else:
        slots = announced.undo(list(zip(firsts, seconds)))
    measured = DibitString(tuple(_bell(backend, f, s) for f, s in slots))
    return measured, measured ^ m


class QKASession:
    """One protocol execution, advanced one step at a time.

    Each ``stepN`` method must be called in order; anything else raises
    ``ProtocolOrderError``. After an abort no further steps run.
    """

    STEPS = 8

    def __init__(self, config: ProtocolConfig, ka: DibitString, kb: DibitString,
                 adversary: Adversary | None = None, rng: np.random.Generator | None = None,
                 backend: Backend | None = None):
        if len(ka) != config.n or len(kb) != config.n:
            raise ConfigError(f"keys must have {config.n} dibits")
        self.config = config
        self.ka, self.kb = ka, kb
        self.adversary = adversary or Adversary()
        self.rng = rng if rng is not None else run_rng(config.seed, 0)
        self.backend = backend or make_backend(config.backend, config.noise, self.rng)
        self.transcript = Transcript()
        self.completed = 0
        self.status: Status | None = None

        self.pairs: list[tuple[int, int]] = []
        self.m_alice: DibitString | None = None
        self.m_bob: DibitString | None = None
        self.used_perm: Permutation | None = None
        self.announced_perm: Permutation | None = None
        self.kb_derived: DibitString | None = None
        self.ka_derived: DibitString | None = None
        self.bob_measurements: DibitString | None = None
        self.alice_final_key: str | None = None
        self.bob_final_key: str | None = None
        self._inflight: list[int] = []
        self._plan: DecoyPlan | None = None

    @property
    def scope(self) -> str:
        return FIRST_PARTICLES if self.config.improved else WHOLE_PAIRS

    def _begin(self, step: int) -> None:
        if self.status is not None and self.status is not Status.AGREED:
            raise ProtocolOrderError(f"run aborted ({self.status.value}); step {step} not allowed")
        if step != self.completed + 1:
            raise ProtocolOrderError(f"step {step} called after step {self.completed}")

    def _send(self, stage: str, transmission: int, label: str, sequence: list[int]) -> None:
        cfg = self.config
        with_decoys, plan = insert_decoys(sequence, cfg.decoy_count, self.backend, self.rng)
        self.transcript.add(stage, "quantum-send", sequence=label, length=len(with_decoys),
                            decoys=len(plan.positions))
        parameter = sample_noise_parameter(self.rng)
        self.backend.transmit(with_decoys, parameter)
        self.transcript.add(stage, "channel-noise", CHANNEL, model=cfg.noise.value, parameter=parameter)
        self.adversary.tamper(transmission, with_decoys, self.backend, self.rng)
        self._inflight, self._plan = with_decoys, plan

    def _check(self, stage: str, abort_status: Status) -> bool:
        plan = self._plan
        self.transcript.add(stage, "decoy-announcement", PUBLIC,
                            positions=list(plan.positions), states=[s.value for s in plan.states])
        check = decoy_check(plan, self._inflight, self.backend, self.config.error_threshold)
        self.transcript.add(stage, "decoy-check", errors=check.errors, count=check.count,
                            error_rate=check.error_rate, passed=check.passed)
        self._inflight = check.stripped
        if not check.passed:
            self.status = abort_status
            self.transcript.add(stage, "abort", reason=abort_status.value)
        return check.passed

    def step1(self) -> None:
        """Alice prepares 2n pairs in Phi+ and sends the second halves with decoys."""
        self._begin(1)
        n = self.config.n
        self.pairs = [self.backend.bell_pair(BellCode.PHI_PLUS) for _ in range(2 * n)]
        self._send("step1", 1, "S_B", [second for _, second in self.pairs])
        self.completed = 1

    def step2(self) -> bool:
        self._begin(2)
        ok = self._check("step2", Status.ABORTED_AT_DECOY_CHECK_1)
        self.completed = 2
        return ok

    def step3(self) -> None:
        """Both parties Bell-measure consecutive particles; Alice goes first."""
        self._begin(3)
        s_a = [first for first, _ in self.pairs]
        s_b = self._inflight
        n = self.config.n
        m_a = [_bell(self.backend, s_a[2 * i], s_a[2 * i + 1]) for i in range(n)]
        m_b = [_bell(self.backend, s_b[2 * i], s_b[2 * i + 1]) for i in range(n)]
        self.m_alice, self.m_bob = DibitString(tuple(m_a)), DibitString(tuple(m_b))
        self.transcript.add("step3", "measurement", ALICE, m=self.m_alice.grouped())
        self.transcript.add("step3", "measurement", BOB, m=self.m_bob.grouped())
        self.completed = 3

    def step4(self) -> None:
        self._begin(4)
        self.used_perm = Permutation.random(self.config.n, self.rng)
        sequence = step4_encode(self.ka, self.m_alice, self.used_perm, self.backend, self.scope)
        self._send("step4", 2, "S_C", sequence)
        self.transcript.add("step4", "permutation", ALICE, scope=self.scope, mapping=list(self.used_perm.mapping))
        self.completed = 4

    def step5(self) -> bool:
        self._begin(5)
        ok = self._check("step5", Status.ABORTED_AT_DECOY_CHECK_2)
        self.completed = 5
        return ok

    def step6(self) -> DibitString:
        """Bob announces K_B xor M; Alice recovers K_B."""
        self._begin(6)
        announcement = step6_announce(self.kb, self.m_bob)
        self.transcript.add("step6", "announcement", value=announcement.grouped())
        self.kb_derived = announcement ^ self.m_alice
        self.transcript.add("step6", "derived", ALICE, kb=self.kb_derived.grouped())
        self.completed = 6
        return announcement

    def step7(self) -> DibitString:
        """Alice reveals the permutation; Bob decodes and derives K_A."""
        self._begin(7)
        announced = self.adversary.announce_permutation(self)
        self.announced_perm = announced if announced is not None else self.used_perm
        self.transcript.add("step7", "permutation-reveal", mapping=list(self.announced_perm.mapping))
        self.bob_measurements, self.ka_derived = step7_decode(
            self._inflight, self.announced_perm, self.m_bob, self.backend, self.scope)
        self.transcript.add("step7", "measurement", BOB, value=self.bob_measurements.grouped())
        self.transcript.add("step7", "derived", BOB, ka=self.ka_derived.grouped())
        self.completed = 7
        return self.ka_derived

    def step8(self) -> None:
        self._begin(8)
        self.alice_final_key = self.adversary.alice_final_key(self) or final_key(self.ka, self.kb_derived, self.m_alice)
        self.bob_final_key = final_key(self.ka_derived, self.kb, self.m_bob)
        self.transcript.add("step8", "final-key", ALICE, key=self.alice_final_key)
        self.transcript.add("step8", "final-key", BOB, key=self.bob_final_key)
        self.status = Status.AGREED
        self.completed = 8

    def run(self) -> RunOutcome:
        self.step1()
        if self.step2():
            self.step3()
            self.step4()
            if self.step5():
                self.step6()
                self.step7()
                self.step8()
        return self.outcome()

    def outcome(self) -> RunOutcome:
        attack = self.adversary.result()
        if attack is not None and hasattr(attack, "to_payload"):
            self.transcript.add("attack", "attack-result", ALICE, **attack.to_payload())
        if self.status is Status.AGREED:
            return RunOutcome(self.status, self.alice_final_key, self.bob_final_key, self.transcript, attack)
        if self.status is None:
            raise ProtocolOrderError("run has not finished")
        return RunOutcome(self.status, None, None, self.transcript, attack)


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    """Independent stream for run ``run_index`` of a campaign seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run_index,)))


def run_protocol(config: ProtocolConfig, ka: DibitString, kb: DibitString, adversary: Adversary | None = None,
                 run_index: int = 0, script: Sequence[int] | None = None) -> RunOutcome:
    """Execute one full run.

    ``script`` (symbolic backend only) fixes the outcomes of random Bell
    measurements in order, e.g. the Step 3 results that make up M.
    """
    rng = run_rng(config.seed, run_index)
    backend = None
    if script is not None:
        if config.backend != SYMBOLIC:
            raise ConfigError("scripted outcomes need the symbolic backend")
        backend = make_backend(SYMBOLIC, config.noise, rng, script=script)
    return QKASession(config, ka, kb, adversary, rng, backend).run()


def step6_announce(kb: DibitString, m: DibitString) -> DibitString:
    """Bob's public value K_B xor M."""
    return kb ^ m
