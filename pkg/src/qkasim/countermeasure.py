"""Improved protocol: Step 4 permutes only the first particle of each pair.

A wrong announcement then makes Bob pair particles from different Bell
states, so his Bell measurements perform entanglement swapping and the
displaced slots come out random instead of being chosen by Alice.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import logical as lg
from . import statevector as sv
from .adversary import AttackGoal, AttackResult, PermutationAttacker, displacement
from .backends import Backend
from .logical import BellCode, NoiseModel
from .protocol import FIRST_PARTICLES, Permutation, ProtocolConfig, RunOutcome, run_protocol, step4_encode, step7_decode
from .symbolic import DibitString


@dataclass(frozen=True)
class ImprovedConfig(ProtocolConfig):
    improved: bool = True

    def __post_init__(self):
        super().__post_init__()
        if not self.improved:
            raise ValueError("ImprovedConfig always permutes first particles only")


def step4_star_encode(ka: DibitString, m: DibitString, perm: Permutation, backend: Backend) -> list[int]:
    return step4_encode(ka, m, perm, backend, FIRST_PARTICLES)


def bob_decode_improved(received: list[int], announced: Permutation, m: DibitString,
                        backend: Backend) -> DibitString:
    _, ka_derived = step7_decode(received, announced, m, backend, FIRST_PARTICLES)
    return ka_derived


def displaced_cycles(announced: Permutation, used: Permutation) -> list[tuple[int, ...]]:
    """Cycles of slots where Bob's reassembly pairs particles from different states."""
    return displacement(announced, used).cycles()


def free_slots(cycles) -> int:
    """Independent uniform codes left by the swapping: one fewer than each cycle length."""
    return sum(len(c) - 1 for c in cycles)


def steering_probability(announced: Permutation, used: Permutation) -> float:
    """Chance that Bob's results match any single fixed target on the displaced slots."""
    return 4.0 ** -free_slots(displaced_cycles(announced, used))


def attack_run_improved(config: ProtocolConfig, ka: DibitString, kb: DibitString,
                        goal: AttackGoal | None = None, shuffle: Permutation | None = None,
                        run_index: int = 0, script=None) -> tuple[RunOutcome, AttackResult]:
    """Improved protocol with Alice announcing a fake permutation.

    ``goal`` crafts the announcement exactly as against the original
    protocol; ``shuffle`` announces a fixed rearrangement of the pairs.
    """
    if not config.improved:
        raise ValueError("attack_run_improved needs an improved config")
    attacker = PermutationAttacker(goal=goal, shuffle=shuffle)
    outcome = run_protocol(config, ka, kb, attacker, run_index=run_index, script=script)
    return outcome, attacker.result() or AttackResult(False)


def cycle_joint_distribution(codes, model: NoiseModel = NoiseModel.DEPHASING) -> dict[tuple[int, ...], float]:
    """Exact law of Bob's results on one displacement cycle, by state vector.

    ``codes[k]`` is the Bell code of the k-th pair on the cycle. Slot k holds
    the first particle of pair k+1 (mod c) and the second particle of pair k,
    all inside one joint register of 4c physical qubits. Returns
    ``{(r_0, ..., r_{c-1}): probability}`` over outcomes with nonzero weight.
    """
    c = len(codes)
    state = lg.make_logical_bell(codes[0], model)
    for code in codes[1:]:
        state = sv.tensor(state, lg.make_logical_bell(code, model))
    bell = [lg.make_logical_bell(b, model).amplitudes for b in BellCode]
    # logical particle 2k is the first of pair k, 2k+1 the second
    slot_particles = [(2 * ((k + 1) % c), 2 * k + 1) for k in range(c)]
    order = [q for f, s in slot_particles for q in (*lg.particle_qubits(f), *lg.particle_qubits(s))]
    psi = sv.permute_qubits(state, order).amplitudes.reshape([16] * c)
    dist = {}
    for results in itertools.product(range(4), repeat=c):
        amp = psi
        for r in results:
            amp = np.tensordot(bell[r].conj(), amp, axes=(0, 0))
        p = float(abs(amp) ** 2)
        if p > 1e-12:
            dist[results] = p
    return dist
