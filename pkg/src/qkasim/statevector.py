"""Dense pure-state simulation for small qubit registers.

Qubit 0 is the leftmost ket symbol and the most significant bit of the
amplitude index, so ``prepare(4, 5)`` is ``|0101>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 12
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
PHASE_TOL = 1e-10


class CapacityError(ValueError):
    """Register would exceed MAX_QUBITS."""


class ValidationError(ValueError):
    """An operator or projector set failed a physical consistency check."""


@dataclass(frozen=True, eq=False)
class PhysicalState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise CapacityError(f"num_qubits must be in 1..{MAX_QUBITS}, got {self.num_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(f"expected {2**self.num_qubits} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = True) -> "PhysicalState":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        n = int(round(np.log2(amps.size)))
        if 2**n != amps.size:
            raise ValueError("amplitude vector length must be a power of two")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("zero vector is not a state")
            amps = amps / norm
        return cls(n, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self):
        terms = []
        for idx in np.flatnonzero(np.abs(self.amplitudes) > 1e-9):
            terms.append(f"({self.amplitudes[idx]:.4g})|{idx:0{self.num_qubits}b}>")
        return "PhysicalState(" + " + ".join(terms) + ")"


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    outcome_index: int
    probability: float
    post_state: PhysicalState


def prepare(num_qubits: int, basis_index: int = 0) -> PhysicalState:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise CapacityError(f"num_qubits must be in 1..{MAX_QUBITS}")
    if not 0 <= basis_index < 2**num_qubits:
        raise ValueError(f"basis_index {basis_index} out of range for {num_qubits} qubits")
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[basis_index] = 1.0
    return PhysicalState(num_qubits, amps)


def ket(bits: str) -> PhysicalState:
    """Basis state from a bit string, e.g. ``ket("0101")``."""
    return prepare(len(bits), int(bits, 2))


def _check_targets(targets: Sequence[int], num_qubits: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits: {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise ValueError(f"target qubit {t} out of range for {num_qubits} qubits")
    return targets


def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])) < tol)


def _apply_operator(amplitudes: np.ndarray, num_qubits: int, matrix: np.ndarray,
                    targets: list[int]) -> np.ndarray:
    k = len(targets)
    psi = amplitudes.reshape([2] * num_qubits)
    op = matrix.reshape([2] * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), targets))
    # tensordot puts the k target axes first; move them back into place
    out = np.moveaxis(out, list(range(k)), targets)
    return out.reshape(-1)


def apply_unitary(state: PhysicalState, matrix, targets: Sequence[int]) -> PhysicalState:
    targets = _check_targets(targets, state.num_qubits)
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (2 ** len(targets),) * 2:
        raise ValueError(f"matrix shape {matrix.shape} does not match {len(targets)} targets")
    if not is_unitary(matrix):
        raise ValidationError("matrix is not unitary")
    amps = _apply_operator(state.amplitudes, state.num_qubits, matrix, targets)
    return PhysicalState(state.num_qubits, amps)


def tensor(a: PhysicalState, b: PhysicalState) -> PhysicalState:
    if a.num_qubits + b.num_qubits > MAX_QUBITS:
        raise CapacityError(f"combined register of {a.num_qubits + b.num_qubits} qubits exceeds {MAX_QUBITS}")
    return PhysicalState(a.num_qubits + b.num_qubits, np.kron(a.amplitudes, b.amplitudes))


def permute_qubits(state: PhysicalState, order: Sequence[int]) -> PhysicalState:
    """New state whose qubit ``i`` is the old qubit ``order[i]``."""
    order = list(order)
    if sorted(order) != list(range(state.num_qubits)):
        raise ValueError(f"{order} is not a permutation of the register")
    psi = state.amplitudes.reshape([2] * state.num_qubits)
    return PhysicalState(state.num_qubits, np.transpose(psi, order).reshape(-1))


def check_projectors(projs: Sequence[np.ndarray], dim: int) -> None:
    """Raise ValidationError unless ``projs`` is a complete orthogonal projector set."""
    for p in projs:
        if p.shape != (dim, dim):
            raise ValueError(f"projector shape {p.shape} does not match dimension {dim}")
        if np.linalg.norm(p @ p - p) > UNITARY_TOL or np.linalg.norm(p - p.conj().T) > UNITARY_TOL:
            raise ValidationError("operator is not an orthogonal projector")
    if np.linalg.norm(sum(projs) - np.eye(dim)) > UNITARY_TOL:
        raise ValidationError("projectors do not sum to identity")
    for i in range(len(projs)):
        for j in range(i + 1, len(projs)):
            if np.linalg.norm(projs[i] @ projs[j]) > UNITARY_TOL:
                raise ValidationError(f"projectors {i} and {j} are not orthogonal")


def measure_projective(state: PhysicalState, projectors: Sequence[np.ndarray], rng: np.random.Generator,
                       targets: Sequence[int] | None = None, validate: bool = True) -> MeasurementRecord:
    """Sample a projective measurement by the Born rule.

    ``projectors`` act on ``targets`` (all qubits when omitted) and must be
    pairwise orthogonal and sum to the identity there. ``validate=False``
    skips those checks for projector sets already known to be complete.
    """
    if targets is None:
        targets = list(range(state.num_qubits))
    targets = _check_targets(targets, state.num_qubits)
    dim = 2 ** len(targets)
    projs = np.asarray(projectors, dtype=np.complex128)
    if validate:
        check_projectors(list(projs), dim)

    # bring the targets to the front; outcome weights come from the reduced
    # density matrix, and only the sampled branch is ever built
    n = state.num_qubits
    order = targets + [q for q in range(n) if q not in targets]
    psi = np.transpose(state.amplitudes.reshape([2] * n), order).reshape(dim, -1)
    rho = psi @ psi.conj().T
    probs = (projs.reshape(len(projs), -1) @ rho.T.reshape(-1)).real.tolist()
    # round-off weight on impossible outcomes must never be sampled
    probs = [p if p > 1e-14 else 0.0 for p in probs]
    total = sum(probs)
    u = rng.random() * total
    k, acc = 0, probs[0]
    while k < len(probs) - 1 and (u >= acc or probs[k] == 0.0):
        k += 1
        acc += probs[k]
    while probs[k] == 0.0:
        k -= 1
    branch = projs[k] @ psi
    inverse = [0] * n
    for i, q in enumerate(order):
        inverse[q] = i
    post = np.transpose(branch.reshape([2] * n), inverse).reshape(-1)
    post /= np.linalg.norm(post)
    return MeasurementRecord(k, probs[k] / total, PhysicalState(n, post))


def project_out(state: PhysicalState, targets: Sequence[int], factor: PhysicalState) -> PhysicalState:
    """Remove ``targets`` from a product state ``factor(targets) x rest``.

    Returns the normalized remainder on the non-target qubits, in their
    original relative order. Raises if the targets are not in ``factor``.
    """
    targets = _check_targets(targets, state.num_qubits)
    if factor.num_qubits != len(targets):
        raise ValueError("factor size does not match targets")
    if len(targets) == state.num_qubits:
        raise ValueError("cannot project out the whole register")
    rest = [q for q in range(state.num_qubits) if q not in targets]
    psi = permute_qubits(state, targets + rest).amplitudes.reshape(2 ** len(targets), -1)
    remainder = factor.amplitudes.conj() @ psi
    weight = np.linalg.norm(remainder)
    if abs(weight - 1.0) > 1e-8:
        raise ValidationError(f"state does not factor on {targets} (overlap {weight:.3g})")
    return PhysicalState(len(rest), remainder / weight)


def inner(a: PhysicalState, b: PhysicalState) -> complex:
    if a.num_qubits != b.num_qubits:
        raise ValueError("register sizes differ")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: PhysicalState, b: PhysicalState) -> float:
    """|<a|b>|, which is 1 exactly when the states agree up to global phase."""
    return abs(inner(a, b))


def equal_up_to_phase(a: PhysicalState, b: PhysicalState, tol: float = PHASE_TOL) -> bool:
    return a.num_qubits == b.num_qubits and fidelity(a, b) >= 1 - tol


def projector(state: PhysicalState) -> np.ndarray:
    v = state.amplitudes
    return np.outer(v, v.conj())


# Common single-qubit gates
I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
