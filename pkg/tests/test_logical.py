import numpy as np
import pytest
from scipy import integrate

from qkasim import logical as lg
from qkasim import statevector as sv
from qkasim.logical import CODESPACE_LEAK, Basis, BellCode, LogicalSymbol, NoiseModel

S = 1 / np.sqrt(2)
MODELS = list(NoiseModel)

# rows: initial state, columns: U_00, U_01, U_10, U_11 (as printed in the transformation table)
TABLE_1 = {
    "Phi+": ["Phi+", "Phi-", "Psi+", "Psi-"],
    "Phi-": ["Phi-", "Phi+", "Psi-", "Psi+"],
    "Psi+": ["Psi+", "Psi-", "Phi+", "Phi-"],
    "Psi-": ["Psi-", "Psi+", "Phi-", "Phi+"],
}
NAMES = {"Phi+": BellCode.PHI_PLUS, "Phi-": BellCode.PHI_MINUS, "Psi+": BellCode.PSI_PLUS, "Psi-": BellCode.PSI_MINUS}


def state(amps):
    return sv.PhysicalState.from_amplitudes(amps)


def test_encodings_match_definitions():
    assert sv.fidelity(lg.encode_logical(LogicalSymbol.ZERO, "dp"), sv.ket("01")) == pytest.approx(1)
    assert sv.fidelity(lg.encode_logical(LogicalSymbol.ONE, "dp"), sv.ket("10")) == pytest.approx(1)
    one_r = lg.encode_logical(LogicalSymbol.ONE, "r")
    assert np.allclose(one_r.amplitudes, [0, S, -S, 0])
    zero_r = lg.encode_logical(LogicalSymbol.ZERO, "r")
    assert np.allclose(zero_r.amplitudes, [S, 0, 0, S])
    plus_dp = lg.encode_logical(LogicalSymbol.PLUS, "dp")
    assert np.allclose(plus_dp.amplitudes, [0, S, S, 0])
    minus_r = lg.encode_logical(LogicalSymbol.MINUS, "r")
    assert np.allclose(minus_r.amplitudes, (zero_r.amplitudes - one_r.amplitudes) * S)


def test_logical_bell_dp_examples():
    phi_plus = np.zeros(16)
    phi_plus[0b0101] = phi_plus[0b1010] = S
    assert np.allclose(lg.make_logical_bell(0b00, "dp").amplitudes, phi_plus)
    psi_minus = np.zeros(16)
    psi_minus[0b0110], psi_minus[0b1001] = S, -S
    assert np.allclose(lg.make_logical_bell(0b11, "dp").amplitudes, psi_minus)


@pytest.mark.parametrize("model", MODELS)
def test_logical_bell_orthonormal(model):
    gram = np.array([[sv.inner(lg.make_logical_bell(x, model), lg.make_logical_bell(y, model))
                      for y in BellCode] for x in BellCode])
    assert np.allclose(gram, np.eye(4), atol=1e-12)


def test_dephasing_examples(rng):
    bell = lg.make_logical_bell(0, "dp")
    assert np.allclose(lg.apply_collective_dephasing(bell, 0.0).amplitudes, bell.amplitudes)
    zero = lg.encode_logical(LogicalSymbol.ZERO, "dp")
    for phi in rng.uniform(0, 2 * np.pi, 20):
        out = lg.apply_collective_dephasing(zero, phi)
        assert np.allclose(out.amplitudes, np.exp(1j * phi) * zero.amplitudes)
        noisy = lg.apply_collective_dephasing(bell, phi)
        # each term carries two |1>s, so the phase is exp(2i phi) overall
        assert np.allclose(noisy.amplitudes, np.exp(2j * phi) * bell.amplitudes)
        assert sv.fidelity(noisy, bell) >= 1 - 1e-10


def test_rotation_examples(rng):
    singlet = lg.encode_logical(LogicalSymbol.ONE, "r")
    assert np.allclose(lg.apply_collective_rotation(singlet, 0.0).amplitudes, singlet.amplitudes)
    for theta in rng.uniform(0, 2 * np.pi, 100):
        assert sv.fidelity(lg.apply_collective_rotation(singlet, theta), singlet) >= 1 - 1e-10
        for code in BellCode:
            b = lg.make_logical_bell(code, "r")
            assert sv.fidelity(lg.apply_collective_rotation(b, theta), b) >= 1 - 1e-10


@pytest.mark.parametrize("model", MODELS)
def test_dfs_invariance_all_states(model, rng):
    states = [lg.encode_logical(s, model) for s in LogicalSymbol] + [lg.make_logical_bell(c, model) for c in BellCode]
    for _ in range(100):
        p = lg.sample_noise_parameter(rng)
        for s in states:
            assert sv.fidelity(lg.apply_collective_noise(s, model, p), s) >= 1 - 1e-10


def test_wrong_encoding_is_not_protected():
    # dephasing-protected states do not survive collective rotation
    plus = lg.encode_logical(LogicalSymbol.PLUS, "dp")
    assert sv.fidelity(lg.apply_collective_rotation(plus, 0.7), plus) < 0.99


def test_bare_qubit_dephasing_error_rate(rng):
    """A physical |+> under random collective dephasing is misread in X half the time."""
    trials = 10_000
    x_basis = [np.full((2, 2), 0.5), np.array([[0.5, -0.5], [-0.5, 0.5]])]
    plus = state([1, 1])
    errors = 0
    for _ in range(trials):
        noisy = lg.apply_collective_dephasing(plus, lg.sample_noise_parameter(rng))
        errors += sv.measure_projective(noisy, x_basis, rng, validate=False).outcome_index
    # oracle: P(error | phi) = sin^2(phi/2), averaged over uniform phi
    expected = integrate.quad(lambda phi: np.sin(phi / 2) ** 2, 0, 2 * np.pi)[0] / (2 * np.pi)
    assert expected == pytest.approx(0.5, abs=1e-6)
    assert abs(errors / trials - expected) <= 0.02


def test_measure_logical_examples(rng):
    zero = lg.encode_logical(LogicalSymbol.ZERO, "dp")
    assert lg.measure_logical(zero, Basis.Z, "dp", rng)[0] is LogicalSymbol.ZERO
    plus = lg.encode_logical(LogicalSymbol.PLUS, "dp")
    assert lg.measure_logical(plus, Basis.X, "dp", rng)[0] is LogicalSymbol.PLUS
    plus_r = lg.encode_logical(LogicalSymbol.PLUS, "r")
    zeros = sum(lg.measure_logical(plus_r, Basis.Z, "r", rng)[0] is LogicalSymbol.ZERO for _ in range(10_000))
    assert abs(zeros / 10_000 - 0.5) <= 0.02
    with pytest.raises(ValueError):
        lg.measure_logical(lg.make_logical_bell(0, "dp"), Basis.Z, "dp", rng)


def test_measure_logical_reports_leak(rng):
    # |00> lies outside the dephasing codespace
    outcome, _ = lg.measure_logical(sv.ket("00"), Basis.Z, "dp", rng)
    assert outcome == CODESPACE_LEAK


@pytest.mark.parametrize("model", MODELS)
def test_bell_round_trip(model, rng):
    for code in BellCode:
        for _ in range(20):
            outcome, _ = lg.measure_logical_bell(lg.make_logical_bell(code, model), model, rng)
            assert outcome is code


def test_bell_measurement_of_product(rng):
    zero = lg.encode_logical(LogicalSymbol.ZERO, "dp")
    pair = sv.tensor(zero, zero)
    counts = {c: 0 for c in BellCode}
    for _ in range(10_000):
        outcome, _ = lg.measure_logical_bell(pair, "dp", rng)
        assert outcome != CODESPACE_LEAK
        counts[outcome] += 1
    # |0_L 0_L> = (Phi+ + Phi-)/sqrt(2)
    assert counts[BellCode.PSI_PLUS] == counts[BellCode.PSI_MINUS] == 0
    assert abs(counts[BellCode.PHI_PLUS] / 10_000 - 0.5) <= 0.02
    assert abs(counts[BellCode.PHI_MINUS] / 10_000 - 0.5) <= 0.02


def test_bell_measurement_leak(rng):
    outcome, _ = lg.measure_logical_bell(sv.ket("0000"), "dp", rng)
    assert outcome == CODESPACE_LEAK
    with pytest.raises(ValueError):
        lg.measure_logical_bell(sv.ket("00"), "dp", rng)


@pytest.mark.parametrize("model", MODELS)
def test_transformation_table(model):
    for row, cols in TABLE_1.items():
        for u, col in zip(BellCode, cols):
            out = lg.apply_logical_unitary(u, lg.make_logical_bell(NAMES[row], model), 0, model)
            assert sv.fidelity(out, lg.make_logical_bell(NAMES[col], model)) >= 1 - 1e-10
            # the table is the XOR action on codes
            assert NAMES[col] == NAMES[row] ^ u


@pytest.mark.parametrize("model", MODELS)
def test_unitaries_are_unitary_and_preserve_codespace(model):
    enc = lg.encoder(model)
    proj = enc @ enc.conj().T
    for code in BellCode:
        u = lg.logical_unitary_matrix(code, model)
        assert sv.is_unitary(u)
        assert np.allclose(u @ proj, proj @ u)


def test_unitary_on_second_particle_also_xors():
    for b in BellCode:
        for u in BellCode:
            out = lg.apply_logical_unitary(u, lg.make_logical_bell(b, "r"), 1, "r")
            assert sv.fidelity(out, lg.make_logical_bell(b ^ u, "r")) >= 1 - 1e-10
