"""Logical qubits in two-qubit decoherence-free subspaces.

Each logical particle occupies two physical qubits. Two encodings are
supported, one immune to collective dephasing (``dp``) and one immune to
collective rotation (``r``). Logical Bell states put the first logical
particle on physical qubits 0-1 and the second on qubits 2-3.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import statevector as sv
from .statevector import PhysicalState


class NoiseModel(str, enum.Enum):
    DEPHASING = "dp"
    ROTATION = "r"


class LogicalSymbol(enum.Enum):
    ZERO = "0L"
    ONE = "1L"
    PLUS = "+L"
    MINUS = "-L"

    @property
    def basis(self) -> "Basis":
        return Basis.Z if self in (LogicalSymbol.ZERO, LogicalSymbol.ONE) else Basis.X


class Basis(str, enum.Enum):
    Z = "Z"
    X = "X"

    @property
    def symbols(self) -> tuple[LogicalSymbol, LogicalSymbol]:
        if self is Basis.Z:
            return LogicalSymbol.ZERO, LogicalSymbol.ONE
        return LogicalSymbol.PLUS, LogicalSymbol.MINUS


class BellCode(enum.IntEnum):
    PHI_PLUS = 0b00
    PHI_MINUS = 0b01
    PSI_PLUS = 0b10
    PSI_MINUS = 0b11

    def __str__(self):
        return format(int(self), "02b")


# UnitaryCode shares the 2-bit encoding: 00 -> I, 01 -> Z, 10 -> X, 11 -> XZ
UnitaryCode = BellCode

CODESPACE_LEAK = "codespace-leak"

_LOGICAL_VECTORS = {
    LogicalSymbol.ZERO: np.array([1, 0], dtype=np.complex128),
    LogicalSymbol.ONE: np.array([0, 1], dtype=np.complex128),
    LogicalSymbol.PLUS: np.array([1, 1], dtype=np.complex128) / np.sqrt(2),
    LogicalSymbol.MINUS: np.array([1, -1], dtype=np.complex128) / np.sqrt(2),
}

_S = 1 / np.sqrt(2)

# logical Bell vectors in the |0_L 0_L>, |0_L 1_L>, |1_L 0_L>, |1_L 1_L> basis
_BELL_VECTORS = {
    BellCode.PHI_PLUS: np.array([_S, 0, 0, _S], dtype=np.complex128),
    BellCode.PHI_MINUS: np.array([_S, 0, 0, -_S], dtype=np.complex128),
    BellCode.PSI_PLUS: np.array([0, _S, _S, 0], dtype=np.complex128),
    BellCode.PSI_MINUS: np.array([0, _S, -_S, 0], dtype=np.complex128),
}

_LOGICAL_PAULIS = {
    0b00: np.eye(2, dtype=np.complex128),
    0b01: sv.Z,
    0b10: sv.X,
    0b11: sv.X @ sv.Z,
}


@lru_cache(maxsize=None)
def encoder(model: NoiseModel) -> np.ndarray:
    """4x2 isometry whose columns are the physical |0_L> and |1_L>."""
    model = NoiseModel(model)
    if model is NoiseModel.DEPHASING:
        zero = sv.ket("01").amplitudes
        one = sv.ket("10").amplitudes
    else:
        zero = (sv.ket("00").amplitudes + sv.ket("11").amplitudes) * _S
        one = (sv.ket("01").amplitudes - sv.ket("10").amplitudes) * _S
    enc = np.column_stack([zero, one])
    enc.setflags(write=False)
    return enc


def encode_logical(symbol: LogicalSymbol, model: NoiseModel) -> PhysicalState:
    return PhysicalState(2, encoder(model) @ _LOGICAL_VECTORS[LogicalSymbol(symbol)])


def make_logical_bell(code: int, model: NoiseModel) -> PhysicalState:
    enc = encoder(model)
    return PhysicalState(4, np.kron(enc, enc) @ _BELL_VECTORS[BellCode(code)])


def collective_dephasing_matrix(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)]).astype(np.complex128)


def collective_rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _apply_collective(state: PhysicalState, single: np.ndarray,
                      qubits: Sequence[int] | None) -> PhysicalState:
    qubits = list(range(state.num_qubits) if qubits is None else qubits)
    double = np.kron(single, single)
    for i in range(0, len(qubits) - 1, 2):
        state = sv.apply_unitary(state, double, qubits[i:i + 2])
    if len(qubits) % 2:
        state = sv.apply_unitary(state, single, qubits[-1:])
    return state


def apply_collective_dephasing(state: PhysicalState, phi: float,
                               qubits: Sequence[int] | None = None) -> PhysicalState:
    """Same phase ``exp(i*phi)`` on |1> of every listed qubit (default: all)."""
    return _apply_collective(state, collective_dephasing_matrix(phi), qubits)


def apply_collective_rotation(state: PhysicalState, theta: float,
                              qubits: Sequence[int] | None = None) -> PhysicalState:
    return _apply_collective(state, collective_rotation_matrix(theta), qubits)


def apply_collective_noise(state: PhysicalState, model: NoiseModel, parameter: float,
                           qubits: Sequence[int] | None = None) -> PhysicalState:
    if NoiseModel(model) is NoiseModel.DEPHASING:
        return apply_collective_dephasing(state, parameter, qubits)
    return apply_collective_rotation(state, parameter, qubits)


def sample_noise_parameter(rng: np.random.Generator) -> float:
    return float(rng.uniform(0.0, 2 * np.pi))


@lru_cache(maxsize=None)
def _codespace_projector(model: NoiseModel, particles: int) -> np.ndarray:
    enc = encoder(model)
    full = enc
    for _ in range(particles - 1):
        full = np.kron(full, enc)
    return full @ full.conj().T


def _frozen_stack(projs) -> np.ndarray:
    stacked = np.stack(projs).astype(np.complex128)
    stacked.setflags(write=False)
    return stacked


@lru_cache(maxsize=None)
def logical_basis_projectors(which: Basis, model: NoiseModel) -> np.ndarray:
    """Stacked projectors for the two outcomes of ``which``, then the leak projector."""
    enc = encoder(model)
    projs = []
    for symbol in Basis(which).symbols:
        v = enc @ _LOGICAL_VECTORS[symbol]
        projs.append(np.outer(v, v.conj()))
    projs.append(np.eye(4) - _codespace_projector(model, 1))
    sv.check_projectors(projs, 4)
    return _frozen_stack(projs)


@lru_cache(maxsize=None)
def logical_bell_projectors(model: NoiseModel) -> np.ndarray:
    projs = [sv.projector(make_logical_bell(code, model)) for code in BellCode]
    projs.append(np.eye(16) - _codespace_projector(model, 2))
    sv.check_projectors(projs, 16)
    return _frozen_stack(projs)


def logical_unitary_matrix(code: int, model: NoiseModel) -> np.ndarray:
    """Physical 4x4 realization of U_code: the logical Pauli on the codespace,
    identity on its complement."""
    enc = encoder(model)
    return enc @ _LOGICAL_PAULIS[int(code)] @ enc.conj().T + (np.eye(4) - enc @ enc.conj().T)


def particle_qubits(index: int) -> list[int]:
    return [2 * index, 2 * index + 1]


def measure_logical(state: PhysicalState, which: Basis, model: NoiseModel, rng: np.random.Generator,
                    particle: int | None = None):
    """Measure one logical particle in the Z_L or X_L basis.

    With ``particle`` omitted the register must hold exactly that particle.
    Returns ``(symbol, post_state)`` where symbol may be CODESPACE_LEAK.
    """
    if particle is None:
        if state.num_qubits != 2:
            raise ValueError(f"logical measurement needs a 2-qubit register, got {state.num_qubits}")
        particle = 0
    elif not 0 <= particle < state.num_qubits // 2:
        raise ValueError(f"no logical particle {particle} in a {state.num_qubits}-qubit register")
    which = Basis(which)
    rec = sv.measure_projective(state, logical_basis_projectors(which, NoiseModel(model)), rng,
                                targets=particle_qubits(particle), validate=False)
    outcome = which.symbols[rec.outcome_index] if rec.outcome_index < 2 else CODESPACE_LEAK
    return outcome, rec.post_state


def measure_logical_bell(state: PhysicalState, model: NoiseModel, rng: np.random.Generator,
                         particles: tuple[int, int] | None = None):
    """Logical Bell measurement of two logical particles.

    Returns ``(BellCode | CODESPACE_LEAK, post_state)``.
    """
    if particles is None:
        if state.num_qubits != 4:
            raise ValueError(f"logical Bell measurement needs a 4-qubit register, got {state.num_qubits}")
        particles = (0, 1)
    targets = particle_qubits(particles[0]) + particle_qubits(particles[1])
    rec = sv.measure_projective(state, logical_bell_projectors(NoiseModel(model)), rng, targets=targets,
                                validate=False)
    outcome = BellCode(rec.outcome_index) if rec.outcome_index < 4 else CODESPACE_LEAK
    return outcome, rec.post_state


def apply_logical_unitary(code: int, state: PhysicalState, target: int, model: NoiseModel) -> PhysicalState:
    """Apply U_code to logical particle ``target`` (physical qubits 2t, 2t+1)."""
    if not 0 <= target < state.num_qubits // 2:
        raise ValueError(f"no logical particle {target} in a {state.num_qubits}-qubit register")
    return sv.apply_unitary(state, logical_unitary_matrix(code, model), particle_qubits(target))
