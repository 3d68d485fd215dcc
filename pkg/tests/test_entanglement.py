import numpy as np
import pytest

from spinwitness.entanglement import (AncillaDensityMatrix, BASIS_LABELS,
                                      evaluate_inequality, is_entangled_ppt,
                                      partial_transpose, sylvester_minor)
from spinwitness.ising import (IsingParams, build_hamiltonian,
                               ground_projector, ground_state)
from spinwitness.linalg import SparseOperator, StateVector, expm_apply
from spinwitness.protocol import (LocalOperator, ProtocolSpec, run_protocol,
                                  toy_protocol_spec)

BELL = np.zeros((4, 4))
BELL[0, 0] = BELL[0, 3] = BELL[3, 0] = BELL[3, 3] = 0.5


def _random_density(rng):
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    m = x @ x.conj().T
    return AncillaDensityMatrix(m / np.trace(m).real)


def _ideal_transfer_state(r):
    """Pure (|00> + r|11>)/sqrt(1+|r|^2) as a density matrix."""
    amps = np.zeros(4, dtype=complex)
    amps[0] = 1.0
    amps[3] = r
    amps /= np.linalg.norm(amps)
    return AncillaDensityMatrix(np.outer(amps, amps.conj()))


def test_basis_labels_order():
    assert BASIS_LABELS == ("00", "01", "10", "11")


def test_density_matrix_validation():
    AncillaDensityMatrix(np.eye(4) / 4)
    with pytest.raises(ValueError):
        AncillaDensityMatrix(np.eye(3) / 3)
    with pytest.raises(ValueError):
        AncillaDensityMatrix(np.eye(4) / 2)
    skewed = np.eye(4, dtype=complex) / 4
    skewed[0, 1] = 1j * 1e-3
    with pytest.raises(ValueError):
        AncillaDensityMatrix(skewed)
    negative = np.diag([0.6, 0.5, 0.0, -0.1])
    with pytest.raises(ValueError):
        AncillaDensityMatrix(negative)


def test_partial_transpose_fixed_points_and_involution():
    product = np.zeros((4, 4))
    product[0, 0] = 1.0
    assert np.allclose(partial_transpose(AncillaDensityMatrix(product)), product)

    rng = np.random.default_rng(3)
    for _ in range(20):
        rho = _random_density(rng)
        pt = partial_transpose(rho)
        assert np.allclose(partial_transpose(pt), rho.entries)
        # PT preserves trace and hermiticity.
        assert np.trace(pt) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(pt, pt.conj().T)


def test_partial_transpose_bell_spectrum():
    pt = partial_transpose(AncillaDensityMatrix(BELL))
    evals = np.sort(np.linalg.eigvalsh(pt))
    assert np.allclose(evals, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_ppt_verdicts():
    entangled, min_eig, negativity = is_entangled_ppt(AncillaDensityMatrix(BELL))
    assert entangled
    assert min_eig == pytest.approx(-0.5, abs=1e-12)
    assert negativity == pytest.approx(0.5, abs=1e-12)

    separable, min_eig, negativity = is_entangled_ppt(
        AncillaDensityMatrix(np.eye(4) / 4))
    assert not separable
    assert min_eig == pytest.approx(0.25, abs=1e-12)
    assert negativity == 0.0


def test_ideal_transfer_state_negativity_closed_form():
    # For the pure state (|00> + r|11>)/sqrt(1+r^2) the partial transpose
    # has minimum eigenvalue -|r|/(1+|r|^2).
    rho = _ideal_transfer_state(0.3)
    entangled, min_eig, negativity = is_entangled_ppt(rho)
    assert entangled
    assert min_eig == pytest.approx(-0.3 / 1.09, abs=1e-12)
    assert negativity == pytest.approx(0.3 / 1.09, abs=1e-12)
    minor, flagged = sylvester_minor(rho)
    assert flagged
    assert minor == pytest.approx(-(0.3 / 1.09) ** 2, abs=1e-12)


def test_negativity_monotone_in_transfer_amplitude():
    values = [is_entangled_ppt(_ideal_transfer_state(r))[2]
              for r in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_werner_family_minor_and_boundary():
    def werner(w):
        return AncillaDensityMatrix(w * BELL + (1 - w) * np.eye(4) / 4)

    minor, flagged = sylvester_minor(werner(0.5))
    assert flagged
    assert minor == pytest.approx(-0.046875, abs=1e-12)
    assert is_entangled_ppt(werner(0.5))[0]

    minor, flagged = sylvester_minor(werner(0.25))
    assert not flagged
    assert minor == pytest.approx(0.01953125, abs=1e-12)
    assert not is_entangled_ppt(werner(0.25))[0]


def test_negative_minor_certifies_entanglement():
    rng = np.random.default_rng(17)
    flagged_count = 0
    for _ in range(200):
        rho = _random_density(rng)
        minor, flagged = sylvester_minor(rho)
        if flagged:
            flagged_count += 1
            assert is_entangled_ppt(rho)[0]
    # The sample must actually exercise the implication.
    assert flagged_count > 10


def test_identity_controls_saturate_inequality():
    p = IsingParams(4, 0.1, 1.0)
    eye_op = LocalOperator((1,), np.eye(2))
    spec = ProtocolSpec(n_sites=p.N, hamiltonian=build_hamiltonian(p),
                        u1=eye_op, u2=eye_op,
                        projector=ground_projector(p.N), tau=5.0)
    report = evaluate_inequality(spec, ground_state(p))
    assert report.margin == pytest.approx(0.0, abs=1e-12)
    assert not report.violated
    assert report.lhs_term_1 == pytest.approx(report.lhs_term_2, abs=1e-12)


def test_zero_time_toy_not_violated():
    p = IsingParams(5, 0.1, 1.0)
    report = evaluate_inequality(toy_protocol_spec(p, 0.0), ground_state(p))
    assert not report.violated
    assert report.lhs_term_1 == pytest.approx(0.0, abs=1e-12)
    assert report.lhs_term_2 == pytest.approx(0.0, abs=1e-12)
    assert report.rhs == pytest.approx(0.0, abs=1e-12)


def test_inequality_terms_are_probabilities():
    p = IsingParams(6, 0.1, 1.0)
    g = ground_state(p)
    for tau_b in (0.5, 1.8, 3.6, 5.4):
        report = evaluate_inequality(toy_protocol_spec(p, tau_b / p.B), g)
        for term in (report.lhs_term_1, report.lhs_term_2, report.rhs):
            assert -1e-12 <= term <= 1.0 + 1e-12


def test_margin_equals_minor_scaled_by_selection():
    # Cross-module identity: the inequality margin computed from chain-only
    # expectation values equals -(4p)^2 times the partial-transpose minor of
    # the post-selected density matrix.
    p = IsingParams(6, 0.05, 1.0)
    g = ground_state(p)
    for tau_b in (1.0, 2.4, 4.85):
        spec = toy_protocol_spec(p, tau_b / p.B)
        report = evaluate_inequality(spec, g)
        out = run_protocol(spec, g)
        minor, _ = sylvester_minor(out.rho)
        scale = (4.0 * out.p_select) ** 2
        assert report.margin == pytest.approx(-minor * scale, abs=1e-12)


class _ConjugatedSpec:
    """The same protocol expressed in a rotated basis W; every expectation
    value must be invariant."""

    def __init__(self, spec, w):
        self._w = w
        self._base = spec
        wd = w.conj().T
        self.embedded_u1 = SparseOperator.from_matrix(
            w @ spec.embedded_u1.dense() @ wd)
        self.embedded_u2 = SparseOperator.from_matrix(
            w @ spec.embedded_u2.dense() @ wd)
        self.projector = SparseOperator.from_matrix(
            w @ spec.projector.dense() @ wd)

    def propagate(self, v, method="auto"):
        back = StateVector(self._w.conj().T @ v.amplitudes, "")
        evolved = expm_apply(self._base.hamiltonian,
                             StateVector(back.amplitudes,
                                         self._base.hamiltonian.basis_tag),
                             self._base.tau, method=method)
        return StateVector(self._w @ evolved.amplitudes, "")


def test_inequality_is_basis_independent():
    rng = np.random.default_rng(29)
    p = IsingParams(4, 0.1, 1.0)
    spec = toy_protocol_spec(p, tau=12.0)
    g = ground_state(p)
    plain = evaluate_inequality(spec, g)

    x = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    w, _ = np.linalg.qr(x)
    rotated_spec = _ConjugatedSpec(spec, w)
    rotated_g = StateVector(w @ g.amplitudes, "")
    rotated = evaluate_inequality(rotated_spec, rotated_g)

    assert rotated.lhs_term_1 == pytest.approx(plain.lhs_term_1, abs=1e-10)
    assert rotated.lhs_term_2 == pytest.approx(plain.lhs_term_2, abs=1e-10)
    assert rotated.rhs == pytest.approx(plain.rhs, abs=1e-10)
    assert rotated.violated == plain.violated
