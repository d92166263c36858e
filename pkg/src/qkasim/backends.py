"""Particle-level quantum backends used by the protocol engine.

Both backends hand out integer particle ids and expose the same handful of
operations (create Bell pairs and decoys, transmit through collective noise,
apply logical unitaries, single-particle and Bell measurements). The
symbolic backend tracks Bell codes only; the state-vector backend keeps
every entangled group of particles in its own small physical register.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import logical as lg
from . import statevector as sv
from .logical import CODESPACE_LEAK, Basis, BellCode, LogicalSymbol, NoiseModel

SYMBOLIC = "symbolic"
STATEVECTOR = "statevector"

# Pauli action of a code on a single-particle symbol: bit 0b10 is X_L, bit 0b01 is Z_L
_X_FLIP = {LogicalSymbol.ZERO: LogicalSymbol.ONE, LogicalSymbol.ONE: LogicalSymbol.ZERO,
           LogicalSymbol.PLUS: LogicalSymbol.PLUS, LogicalSymbol.MINUS: LogicalSymbol.MINUS}
_Z_FLIP = {LogicalSymbol.ZERO: LogicalSymbol.ZERO, LogicalSymbol.ONE: LogicalSymbol.ONE,
           LogicalSymbol.PLUS: LogicalSymbol.MINUS, LogicalSymbol.MINUS: LogicalSymbol.PLUS}


class BackendError(RuntimeError):
    pass


class Backend:
    name = "abstract"

    def __init__(self, model: NoiseModel, rng: np.random.Generator):
        self.model = NoiseModel(model)
        self.rng = rng
        self._ids = itertools.count()

    def _new_id(self) -> int:
        return next(self._ids)

    def bell_pair(self, code: int) -> tuple[int, int]:
        raise NotImplementedError

    def decoy(self, symbol: LogicalSymbol) -> int:
        raise NotImplementedError

    def transmit(self, particles: Sequence[int], parameter: float) -> None:
        """One collective-noise draw applied to every particle in the batch."""
        raise NotImplementedError

    def apply_unitary(self, code: int, particle: int) -> None:
        raise NotImplementedError

    def measure_single(self, particle: int, basis: Basis):
        """Logical Z_L/X_L measurement; the particle stays in its collapsed state."""
        raise NotImplementedError

    def bell_measure(self, p: int, q: int):
        """Logical Bell measurement of two particles; both are consumed."""
        raise NotImplementedError

    def discard(self, particle: int) -> None:
        raise NotImplementedError


class SymbolicBackend(Backend):
    """Bell-code bookkeeping.

    A measurement of one half of a Bell pair is represented by its effect on
    the pair (a random Z_L or X_L flip), which reproduces every statistic the
    later Bell measurements can see.

    ``script`` optionally supplies the outcomes of random Bell measurements in
    the order they occur, which pins M for worked examples.
    """

    name = SYMBOLIC

    def __init__(self, model: NoiseModel, rng: np.random.Generator, script: Iterable[int] | None = None):
        super().__init__(model, rng)
        self._partner: dict[int, int] = {}
        self._code: dict[int, int] = {}
        self._single: dict[int, LogicalSymbol] = {}
        self._script: Iterator[int] | None = iter(script) if script is not None else None

    def _random_code(self) -> int:
        if self._script is not None:
            try:
                return int(next(self._script))
            except StopIteration:
                self._script = None
        return int(self.rng.integers(0, 4))

    def _link(self, a: int, b: int, code: int) -> None:
        self._partner[a], self._partner[b] = b, a
        self._code[a] = self._code[b] = int(code)

    def _unlink(self, a: int) -> tuple[int, int]:
        b = self._partner.pop(a)
        del self._partner[b]
        code = self._code.pop(a)
        del self._code[b]
        return b, code

    def code_of(self, particle: int) -> BellCode:
        return BellCode(self._code[particle])

    def bell_pair(self, code: int) -> tuple[int, int]:
        a, b = self._new_id(), self._new_id()
        self._link(a, b, code)
        return a, b

    def decoy(self, symbol: LogicalSymbol) -> int:
        p = self._new_id()
        self._single[p] = LogicalSymbol(symbol)
        return p

    def transmit(self, particles: Sequence[int], parameter: float) -> None:
        # the logical encodings are invariant under their collective channel
        for p in particles:
            if p not in self._partner and p not in self._single:
                raise BackendError(f"unknown particle {p}")

    def apply_unitary(self, code: int, particle: int) -> None:
        code = int(code)
        if particle in self._partner:
            partner = self._partner[particle]
            self._code[particle] = self._code[partner] = self._code[particle] ^ code
        else:
            s = self._single[particle]
            if code & 0b10:
                s = _X_FLIP[s]
            if code & 0b01:
                s = _Z_FLIP[s]
            self._single[particle] = s

    def measure_single(self, particle: int, basis: Basis):
        basis = Basis(basis)
        if particle in self._single:
            s = self._single[particle]
            if s.basis is not basis:
                s = basis.symbols[int(self.rng.integers(0, 2))]
                self._single[particle] = s
            return s
        # half of a Bell pair: outcome uniform, pair dephased in that basis
        outcome = basis.symbols[int(self.rng.integers(0, 2))]
        if self.rng.integers(0, 2):
            self.apply_unitary(0b01 if basis is Basis.Z else 0b10, particle)
        return outcome

    def bell_measure(self, p: int, q: int):
        if p in self._single or q in self._single:
            raise BackendError("symbolic backend only Bell-measures halves of Bell pairs")
        if self._partner[p] == q:
            _, code = self._unlink(p)
            return BellCode(code)
        p_partner, c1 = self._unlink(p)
        q_partner, c2 = self._unlink(q)
        result = self._random_code()
        self._link(p_partner, q_partner, result ^ c1 ^ c2)
        return BellCode(result)

    def discard(self, particle: int) -> None:
        if particle in self._single:
            del self._single[particle]
        elif particle in self._partner:
            # tracing out one half leaves the partner maximally mixed
            partner, _ = self._unlink(particle)
            self._single[partner] = LogicalSymbol.ZERO if self.rng.integers(0, 2) else LogicalSymbol.ONE


class StateVectorBackend(Backend):
    """Physical-qubit simulation with one register per entangled group.

    Registers merge when a Bell measurement spans two of them and measured
    particles are factored back out, so registers stay at 8 qubits or fewer
    throughout the protocol.
    """

    name = STATEVECTOR

    def __init__(self, model: NoiseModel, rng: np.random.Generator):
        super().__init__(model, rng)
        self._registers: dict[int, tuple[sv.PhysicalState, list[int | None]]] = {}
        self._where: dict[int, int] = {}
        self._rids = itertools.count()
        self.max_register_qubits = 0

    def _add_register(self, state: sv.PhysicalState, particles: list[int | None]) -> int:
        rid = next(self._rids)
        self._registers[rid] = (state, particles)
        for p in particles:
            if p is not None:
                self._where[p] = rid
        self.max_register_qubits = max(self.max_register_qubits, state.num_qubits)
        return rid

    def _locate(self, particle: int) -> tuple[int, int]:
        try:
            rid = self._where[particle]
        except KeyError:
            raise BackendError(f"unknown or consumed particle {particle}") from None
        return rid, self._registers[rid][1].index(particle)

    def _merge(self, r1: int, r2: int) -> int:
        s1, p1 = self._registers.pop(r1)
        s2, p2 = self._registers.pop(r2)
        return self._add_register(sv.tensor(s1, s2), p1 + p2)

    def _split(self, rid: int, slots: list[int], factor: sv.PhysicalState) -> None:
        """Drop the particles at ``slots`` whose joint state is ``factor``."""
        state, particles = self._registers.pop(rid)
        for s in slots:
            if particles[s] is not None:
                self._where.pop(particles[s], None)
        if len(slots) == len(particles):
            return
        qubits = [q for s in slots for q in lg.particle_qubits(s)]
        rest_state = sv.project_out(state, qubits, factor)
        rest = [p for i, p in enumerate(particles) if i not in slots]
        self._add_register(rest_state, rest)

    def state_of(self, particle: int) -> tuple[sv.PhysicalState, list[int | None]]:
        rid, _ = self._locate(particle)
        return self._registers[rid]

    def bell_pair(self, code: int) -> tuple[int, int]:
        a, b = self._new_id(), self._new_id()
        self._add_register(lg.make_logical_bell(code, self.model), [a, b])
        return a, b

    def decoy(self, symbol: LogicalSymbol) -> int:
        p = self._new_id()
        self._add_register(lg.encode_logical(symbol, self.model), [p])
        return p

    def transmit(self, particles: Sequence[int], parameter: float) -> None:
        by_register: dict[int, list[int]] = {}
        for p in particles:
            rid, slot = self._locate(p)
            by_register.setdefault(rid, []).extend(lg.particle_qubits(slot))
        for rid, qubits in by_register.items():
            state, members = self._registers[rid]
            noisy = lg.apply_collective_noise(state, self.model, parameter, qubits)
            self._registers[rid] = (noisy, members)

    def apply_unitary(self, code: int, particle: int) -> None:
        rid, slot = self._locate(particle)
        state, members = self._registers[rid]
        self._registers[rid] = (lg.apply_logical_unitary(code, state, slot, self.model), members)

    def measure_single(self, particle: int, basis: Basis):
        rid, slot = self._locate(particle)
        state, members = self._registers[rid]
        outcome, post = lg.measure_logical(state, basis, self.model, self.rng, particle=slot)
        self._registers[rid] = (post, members)
        if outcome != CODESPACE_LEAK and len(members) > 1:
            collapsed = lg.encode_logical(outcome, self.model)
            self._split(rid, [slot], collapsed)
            self._add_register(collapsed, [particle])
        return outcome

    def bell_measure(self, p: int, q: int):
        rp, _ = self._locate(p)
        rq, _ = self._locate(q)
        if rp != rq:
            self._merge(rp, rq)
        rid, sp = self._locate(p)
        _, sq = self._locate(q)
        state, members = self._registers[rid]
        outcome, post = lg.measure_logical_bell(state, self.model, self.rng, particles=(sp, sq))
        self._registers[rid] = (post, members)
        if outcome == CODESPACE_LEAK:
            # leave the leaked qubits in place but retire the particle ids
            members[sp] = members[sq] = None
            self._where.pop(p)
            self._where.pop(q)
            return outcome
        self._split(rid, [sp, sq], lg.make_logical_bell(outcome, self.model))
        return outcome

    def discard(self, particle: int) -> None:
        rid, slot = self._locate(particle)
        state, members = self._registers[rid]
        if len(members) == 1:
            del self._registers[rid]
            del self._where[particle]
            return
        # measuring before discarding leaves the rest in a valid reduced ensemble
        self.measure_single(particle, Basis.Z)
        rid, _ = self._locate(particle)
        del self._registers[rid]
        del self._where[particle]


def make_backend(kind: str, model: NoiseModel, rng: np.random.Generator, **kwargs) -> Backend:
    if kind == SYMBOLIC:
        return SymbolicBackend(model, rng, **kwargs)
    if kind == STATEVECTOR:
        if kwargs:
            raise ValueError(f"state-vector backend takes no options: {sorted(kwargs)}")
        return StateVectorBackend(model, rng)
    raise ValueError(f"unknown backend {kind!r}")
