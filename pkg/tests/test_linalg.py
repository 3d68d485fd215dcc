import numpy as np
import pytest

from spinwitness.linalg import (SparseOperator, StateVector, apply, expm_apply,
                                inner)

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def random_hermitian(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return SparseOperator.from_matrix((a + a.conj().T) / 2, hermitian_flag=True)


def random_state(rng, dim, tag=""):
    a = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(a, tag).normalize()


def dense_expm_oracle(H, v, t):
    evals, evecs = np.linalg.eigh(H.dense())
    return evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ v.amplitudes))


# The 6-state hop matrix for a 5-site chain, enumerated by hand over the
# pairs (2,2),(2,3),(2,4),(3,3),(3,4),(4,4): used as a fixed nontrivial
# Hermitian test operator here, independent of the walk module.
HOP_5 = np.array([
    [0, 1, 0, 0, 0, 0],
    [1, 0, 1, 1, 0, 0],
    [0, 1, 0, 0, 1, 0],
    [0, 1, 0, 0, 1, 0],
    [0, 0, 1, 1, 0, 1],
    [0, 0, 0, 0, 1, 0],
], dtype=complex)


def test_inner_normalized_self_is_one():
    rng = np.random.default_rng(1)
    v = random_state(rng, 7)
    assert abs(inner(v, v) - 1.0) < 1e-12


def test_inner_orthogonal_and_plus_state():
    zero = StateVector.basis_state(2, 0)
    one = StateVector.basis_state(2, 1)
    plus = StateVector(np.array([1.0, 1.0]) / np.sqrt(2.0))
    assert inner(zero, one) == 0
    assert abs(inner(plus, zero) - 1.0 / np.sqrt(2.0)) < 1e-12


def test_inner_conjugate_linear_first_argument():
    u = StateVector(np.array([1.0j, 0.0]))
    v = StateVector(np.array([1.0, 0.0]))
    assert abs(inner(u, v) - (-1.0j)) < 1e-12


def test_inner_rejects_mismatched_dims_and_bases():
    with pytest.raises(ValueError):
        inner(StateVector.basis_state(2, 0), StateVector.basis_state(4, 0))
    with pytest.raises(ValueError):
        inner(StateVector.basis_state(2, 0, "a"), StateVector.basis_state(2, 0, "b"))


def test_apply_identity_and_sigma_x():
    v = StateVector(np.array([0.3, 0.4j]))
    eye = SparseOperator.identity(2)
    assert np.allclose(apply(eye, v).amplitudes, v.amplitudes)
    out = apply(SparseOperator.from_matrix(SX), StateVector.basis_state(2, 0))
    assert np.allclose(out.amplitudes, [0.0, 1.0])


def test_apply_does_not_normalize():
    v = StateVector(np.array([1.0, 0.0]))
    half = SparseOperator.from_matrix(0.5 * np.eye(2))
    assert abs(apply(half, v).norm() - 0.5) < 1e-12


def test_apply_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(SparseOperator.identity(2), StateVector.basis_state(4, 0))


def test_duplicate_entries_are_summed():
    op = SparseOperator(2, [(0, 1, 0.5), (0, 1, 0.5), (1, 0, 1.0)],
                        hermitian_flag=True)
    assert np.allclose(op.dense(), SX)


def test_hermitian_flag_verified_on_construction():
    with pytest.raises(ValueError):
        SparseOperator(2, [(0, 1, 1.0)], hermitian_flag=True)
    with pytest.raises(ValueError):
        SparseOperator.from_matrix(np.array([[0, 1], [0, 0]], dtype=complex),
                                   hermitian_flag=True)


def test_normalize_and_zero_vector():
    v = StateVector(np.array([3.0, 4.0]))
    assert abs(v.normalize().norm() - 1.0) < 1e-12
    with pytest.raises(ValueError):
        StateVector(np.zeros(2)).normalize()


def test_expm_zero_operator_is_identity():
    v = StateVector(np.array([0.6, 0.8j]))
    zero = SparseOperator(2, [], hermitian_flag=True)
    for method in ("eig", "chebyshev"):
        out = expm_apply(zero, v, 1.0, method=method)
        assert np.allclose(out.amplitudes, v.amplitudes, atol=1e-12)


def test_expm_single_spin_rotation_closed_form():
    h = SparseOperator.from_matrix(SX, hermitian_flag=True)
    v = StateVector.basis_state(2, 0)
    for method in ("eig", "chebyshev"):
        out = expm_apply(h, v, np.pi / 2.0, method=method)
        assert np.allclose(out.amplitudes, [0.0, -1.0j], atol=1e-12)


def test_expm_hop_matrix_matches_dense_oracle():
    B = 0.1
    h = SparseOperator.from_matrix(B * HOP_5, hermitian_flag=True)
    v = StateVector.basis_state(6, 0)
    expected = dense_expm_oracle(h, v, 1.0 / B)
    for method in ("eig", "chebyshev"):
        out = expm_apply(h, v, 1.0 / B, method=method)
        assert np.max(np.abs(out.amplitudes - expected)) < 1e-10


def test_expm_preserves_norm_random():
    rng = np.random.default_rng(7)
    for dim in (2, 3, 8, 17, 64):
        h = random_hermitian(rng, dim)
        v = random_state(rng, dim)
        for t in rng.uniform(-5.0, 5.0, size=3):
            for method in ("eig", "chebyshev"):
                out = expm_apply(h, v, float(t), method=method)
                assert abs(out.norm() - 1.0) < 1e-10


def test_expm_group_law():
    rng = np.random.default_rng(11)
    h = random_hermitian(rng, 12)
    v = random_state(rng, 12)
    for method in ("eig", "chebyshev"):
        t1, t2 = 0.7, 1.9
        once = expm_apply(h, v, t1 + t2, method=method)
        twice = expm_apply(h, expm_apply(h, v, t1, method=method), t2, method=method)
        assert np.max(np.abs(once.amplitudes - twice.amplitudes)) < 1e-9


def test_expm_methods_agree_with_oracle_across_dims():
    rng = np.random.default_rng(3)
    for dim in (4, 33, 128, 256):
        h = random_hermitian(rng, dim)
        v = random_state(rng, dim)
        t = float(rng.uniform(0.1, 3.0))
        expected = dense_expm_oracle(h, v, t)
        for method in ("eig", "chebyshev"):
            out = expm_apply(h, v, t, method=method)
            assert np.max(np.abs(out.amplitudes - expected)) < 1e-10


def test_expm_negative_time_inverts():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 9)
    v = random_state(rng, 9)
    for method in ("eig", "chebyshev"):
        back = expm_apply(h, expm_apply(h, v, 2.3, method=method), -2.3,
                          method=method)
        assert np.max(np.abs(back.amplitudes - v.amplitudes)) < 1e-10


def test_expm_rejections():
    flagless = SparseOperator.from_matrix(SX, hermitian_flag=False)
    v = StateVector.basis_state(2, 0)
    with pytest.raises(ValueError):
        expm_apply(flagless, v, 1.0)
    h = SparseOperator.from_matrix(SX, hermitian_flag=True)
    for bad_t in (np.nan, np.inf):
        with pytest.raises(ValueError):
            expm_apply(h, v, bad_t)
    with pytest.raises(ValueError):
        expm_apply(h, StateVector.basis_state(4, 0), 1.0)
    with pytest.raises(ValueError):
        expm_apply(h, v, 1.0, method="pade")
