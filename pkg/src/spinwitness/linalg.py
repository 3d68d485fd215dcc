"""Complex vector and sparse-operator kernels shared by every engine.

The two workhorse types are :class:`StateVector` (a labeled complex
amplitude vector) and :class:`SparseOperator` (a Hermitian-or-not operator
in sparse coordinate form).  The one nontrivial routine is
:func:`expm_apply`, the action of exp(-i*H*t) on a vector, which is what
every propagation in the package reduces to.

Tolerance constants used across modules live here so there is a single
source of truth.
"""

from __future__ import annotations

import weakref

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

# Norm and Hermiticity checks.
ATOL_NORM = 1e-10
# Cross-oracle comparisons (two independent routes to the same number).
ATOL_ORACLE = 1e-9
# Strict-inequality decisions; never claim a violation from roundoff.
STRICT_TOL = 1e-12
# Density matrices may dip this far below zero and still count as PSD.
PSD_FLOOR = -1e-9

# Below this dimension a dense eigendecomposition beats the Chebyshev
# iteration and can be cached per operator for repeated time steps.
DENSE_EIG_MAX_DIM = 512

_CHEB_CUTOFF = 1e-16


class StateVector:
    """Complex amplitudes over a labeled basis.

    basis_tag identifies which basis the amplitudes refer to (for example
    "chain:N=8", "walk:N=8", "ancilla*chain:N=8") so that mixing vectors
    from different spaces fails loudly instead of silently.
    """

    __slots__ = ("amplitudes", "basis_tag", "__weakref__")

    def __init__(self, amplitudes, basis_tag: str = ""):
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes must be a nonempty 1-d array")
        self.amplitudes = amps
        self.basis_tag = basis_tag

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.basis_tag)

    @classmethod
    def basis_state(cls, dim: int, index: int, basis_tag: str = "") -> "StateVector":
        if not 0 <= index < dim:
            raise ValueError(f"basis index {index} out of range for dim {dim}")
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps, basis_tag)

    def __repr__(self):
        return f"StateVector(dim={self.dim}, basis_tag={self.basis_tag!r})"


class SparseOperator:
    """Sparse operator with an optional verified-Hermitian contract.

    Construct from coordinate entries or via :meth:`from_matrix`. When
    hermitian_flag is set the entries are checked against the adjoint at
    construction time; propagation refuses operators without the flag.
    """

    __slots__ = ("matrix", "hermitian_flag", "basis_tag", "__weakref__")

    def __init__(self, dim: int, entries, hermitian_flag: bool = False,
                 basis_tag: str = ""):
        if dim <= 0:
            raise ValueError("dim must be positive")
        entries = list(entries)
        if entries:
            rows, cols, vals = zip(*entries)
        else:
            rows, cols, vals = (), (), ()
        mat = sp.coo_matrix(
            (np.asarray(vals, dtype=complex),
             (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(dim, dim),
        ).tocsr()
        # CSR construction sums duplicate (row, col) pairs: canonical form.
        mat.sum_duplicates()
        self.matrix = mat
        self.basis_tag = basis_tag
        self.hermitian_flag = bool(hermitian_flag)
        if self.hermitian_flag:
            _check_hermitian(mat)

    @classmethod
    def from_matrix(cls, matrix, hermitian_flag: bool = False,
                    basis_tag: str = "") -> "SparseOperator":
        mat = sp.csr_matrix(matrix, dtype=complex)
        if mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        op = cls.__new__(cls)
        op.matrix = mat
        op.basis_tag = basis_tag
        op.hermitian_flag = bool(hermitian_flag)
        if op.hermitian_flag:
            _check_hermitian(mat)
        return op

    @classmethod
    def identity(cls, dim: int, basis_tag: str = "") -> "SparseOperator":
        return cls.from_matrix(sp.identity(dim, dtype=complex, format="csr"),
                               hermitian_flag=True, basis_tag=basis_tag)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def entries(self):
        """Coordinate view (row, col, value) of the stored nonzeros."""
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def adjoint(self) -> "SparseOperator":
        return SparseOperator.from_matrix(self.matrix.conj().T.tocsr(),
                                          hermitian_flag=self.hermitian_flag,
                                          basis_tag=self.basis_tag)

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        if self.dim != other.dim:
            raise ValueError("operator dimension mismatch")
        return SparseOperator.from_matrix(self.matrix @ other.matrix,
                                          basis_tag=self.basis_tag)

    def __repr__(self):
        return (f"SparseOperator(dim={self.dim}, nnz={self.matrix.nnz}, "
                f"hermitian={self.hermitian_flag})")


def _check_hermitian(mat) -> None:
    resid = abs(mat - mat.conj().T)
    bad = resid.max() if resid.nnz else 0.0
    if bad > ATOL_NORM:
        raise ValueError(f"operator marked Hermitian but |A - A^dag| = {bad:.3e}")


def inner(u: StateVector, v: StateVector) -> complex:
    """<u|v>, conjugate-linear in the first argument."""
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")
    if u.basis_tag != v.basis_tag:
        raise ValueError(f"basis mismatch: {u.basis_tag!r} vs {v.basis_tag!r}")
    return complex(np.vdot(u.amplitudes, v.amplitudes))


def apply(A: SparseOperator, v: StateVector) -> StateVector:
    """A|v> without normalization."""
    if A.dim != v.dim:
        raise ValueError(f"dimension mismatch: operator {A.dim} vs state {v.dim}")
    return StateVector(A.matrix @ v.amplitudes, v.basis_tag)


def expectation(A: SparseOperator, v: StateVector) -> complex:
    """<v|A|v>."""
    return inner(v, apply(A, v))


# Eigendecompositions are expensive relative to the per-step work they
# enable, so keep one per live operator object.
_eig_cache: "weakref.WeakKeyDictionary[SparseOperator, tuple]" = weakref.WeakKeyDictionary()


def _eigendecomposition(H: SparseOperator):
    cached = _eig_cache.get(H)
    if cached is None:
        evals, evecs = np.linalg.eigh(H.dense())
        cached = (evals, evecs)
        _eig_cache[H] = cached
    return cached


def _gershgorin_interval(mat) -> tuple[float, float]:
    """Real interval guaranteed to contain the spectrum of Hermitian mat."""
    diag = mat.diagonal().real
    radii = np.asarray(abs(mat).sum(axis=1)).ravel() - np.abs(mat.diagonal())
    return float(np.min(diag - radii)), float(np.max(diag + radii))


def _expm_apply_chebyshev(H: SparseOperator, amps: np.ndarray, t: float) -> np.ndarray:
    lo, hi = _gershgorin_interval(H.matrix)
    center = 0.5 * (hi + lo)
    half_width = 0.5 * (hi - lo)
    phase = np.exp(-1j * center * t)
    alpha = half_width * t
    if half_width == 0.0 or alpha == 0.0:
        if half_width == 0.0:
            # All Gershgorin discs are points at the same center: H = c*I.
            return phase * amps
        return amps.copy()
    # exp(-i*alpha*x) = sum_k (2 - delta_k0) (-i)^k J_k(alpha) T_k(x), |x| <= 1.
    k_max = int(abs(alpha)) + max(32, int(10 * abs(alpha) ** (1.0 / 3.0)))
    ks = np.arange(k_max + 1)
    bessel = jv(ks, alpha)
    keep = np.nonzero(np.abs(bessel) >= _CHEB_CUTOFF)[0]
    last = int(keep[-1]) if keep.size else 0
    coeffs = (np.where(ks == 0, 1.0, 2.0) * (-1j) ** ks * bessel)[: last + 1]

    scaled = H.matrix / half_width
    shift = center / half_width

    def matvec(x):
        return scaled @ x - shift * x

    w_prev = amps
    acc = coeffs[0] * w_prev
    if len(coeffs) > 1:
        w_curr = matvec(amps)
        acc = acc + coeffs[1] * w_curr
        for c in coeffs[2:]:
            w_prev, w_curr = w_curr, 2.0 * matvec(w_curr) - w_prev
            acc = acc + c * w_curr
    return phase * acc


def expm_apply(H: SparseOperator, v: StateVector, t: float,
               method: str = "auto") -> StateVector:
    """exp(-i*H*t)|v> for Hermitian H.

    method "eig" diagonalizes densely (cached per operator, best for small
    dimensions and repeated steps); "chebyshev" iterates a Chebyshev
    expansion with a Gershgorin spectral interval (matrix-free apart from
    matvecs, best for large sparse H); "auto" picks by dimension.
    """
    if not H.hermitian_flag:
        raise ValueError("expm_apply requires an operator constructed as Hermitian")
    if H.dim != v.dim:
        raise ValueError(f"dimension mismatch: operator {H.dim} vs state {v.dim}")
    if not np.isfinite(t):
        raise ValueError("evolution time must be finite")
    if method == "auto":
        method = "eig" if H.dim <= DENSE_EIG_MAX_DIM else "chebyshev"
    if method == "eig":
        evals, evecs = _eigendecomposition(H)
        out = evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ v.amplitudes))
    elif method == "chebyshev":
        out = _expm_apply_chebyshev(H, v.amplitudes, float(t))
    else:
        raise ValueError(f"unknown method {method!r}")
    return StateVector(out, v.basis_tag)
