"""Transverse-field Ising chain on N sites with open boundaries.

H = B * sum_k sigma_x(k) - J * sum_k sigma_z(k) sigma_z(k+1)

Conventions fixed here and relied on everywhere else:

* sites are numbered 1..N, spin k is stored in bit k-1 of the basis index;
* |0> is the sigma_z eigenvalue +1 state, so the all-aligned product state
  |g> = |00...0> sits at basis index 0;
* the chain is open: N-1 coupling bonds, site 1 and site N each touch one
  neighbor only.

The low-field excitations relevant here are contiguous flipped blocks
|e_{i,j}> (spins i..j flipped, 2 <= i <= j <= N-1), each carrying exactly
two domain walls.  DomainWallBasis enumerates them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linalg import SparseOperator, StateVector

# Dense statevector engines refuse chains beyond this size.
EXACT_CAP = 16

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class IsingParams:
    """Chain length and couplings; B/J <= walk_validity_ratio marks the
    regime where the domain-wall walk approximation is trusted."""

    N: int
    B: float
    J: float
    walk_validity_ratio: float = 0.1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 4:
            raise ValueError("N must be an integer >= 4 (sites 2 and N-1 interior)")
        if not (self.B > 0 and self.J > 0):
            raise ValueError("B and J must be positive")

    @property
    def ratio(self) -> float:
        return self.B / self.J

    @property
    def walk_regime(self) -> bool:
        return self.ratio <= self.walk_validity_ratio

    def chain_tag(self) -> str:
        return f"chain:N={self.N}"


@dataclass(frozen=True)
class DomainWallBasis:
    """Lexicographic enumeration of the two-domain-wall states |e_{i,j}>."""

    N: int
    pairs: tuple = field(init=False)

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("domain-wall basis needs N >= 4")
        pairs = tuple((i, j) for i in range(2, self.N) for j in range(i, self.N))
        object.__setattr__(self, "pairs", pairs)

    @property
    def size(self) -> int:
        return (self.N - 2) * (self.N - 1) // 2

    def index_of(self, i: int, j: int) -> int:
        if not (2 <= i <= j <= self.N - 1):
            raise ValueError(f"(i, j) = ({i}, {j}) outside 2 <= i <= j <= {self.N - 1}")
        # Offset of row i in the lexicographic triangle, then j within it.
        full = self.N - 2
        done = i - 2
        return done * full - done * (done - 1) // 2 + (j - i)

    def pair_of(self, k: int) -> tuple:
        return self.pairs[k]

    def tag(self) -> str:
        return f"walk:N={self.N}"


def _require_exact(n: int) -> None:
    if n > EXACT_CAP:
        raise ValueError(
            f"N = {n} exceeds the exact-engine cap {EXACT_CAP} "
            "(2^N amplitudes); use the walk engine for larger chains")
    if n < 1:
        raise ValueError("need at least one site")


def coupling_hamiltonian(n: int, J: float, basis_tag: str = "") -> SparseOperator:
    """Diagonal part -J sum sigma_z(k) sigma_z(k+1) over the n-1 open bonds."""
    _require_exact(n)
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    diag = np.zeros(dim)
    for k in range(n - 1):
        s_k = 1 - 2 * ((idx >> k) & 1)
        s_k1 = 1 - 2 * ((idx >> (k + 1)) & 1)
        diag -= J * s_k * s_k1
    mat = sp.diags(diag.astype(complex), format="csr")
    return SparseOperator.from_matrix(mat, hermitian_flag=True, basis_tag=basis_tag)


def field_hamiltonian(n: int, B: float, basis_tag: str = "") -> SparseOperator:
    """Off-diagonal part B sum sigma_x(k): single spin flips."""
    _require_exact(n)
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    rows = np.concatenate([idx] * n)
    cols = np.concatenate([idx ^ (1 << k) for k in range(n)])
    vals = np.full(n * dim, B, dtype=complex)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    return SparseOperator.from_matrix(mat, hermitian_flag=True, basis_tag=basis_tag)


def chain_hamiltonian(n: int, B: float, J: float, basis_tag: str = "") -> SparseOperator:
    """Full H for an n-site open chain, no parameter-range policy applied."""
    hb = field_hamiltonian(n, B, basis_tag)
    hj = coupling_hamiltonian(n, J, basis_tag)
    return SparseOperator.from_matrix(hb.matrix + hj.matrix,
                                      hermitian_flag=True, basis_tag=basis_tag)


def build_hamiltonian(p: IsingParams) -> SparseOperator:
    return chain_hamiltonian(p.N, p.B, p.J, p.chain_tag())


def ground_state(p: IsingParams) -> StateVector:
    """The aligned product state |00...0>.

    This is the exact ground state only at B = 0; for B/J << 1 it is the
    approximate ground state the protocol actually prepares, and exact-engine
    runs treat its deviation from the true ground state as physics, not error.
    """
    return StateVector.basis_state(1 << p.N, 0, p.chain_tag())


def excitation_index(N: int, i: int, j: int) -> int:
    """Basis index of |e_{i,j}>: bits i-1 .. j-1 set."""
    if not (2 <= i <= j <= N - 1):
        raise ValueError(f"(i, j) = ({i}, {j}) outside 2 <= i <= j <= {N - 1}")
    return ((1 << (j - i + 1)) - 1) << (i - 1)


def excitation_state(basis: DomainWallBasis, i: int, j: int) -> StateVector:
    """Full-chain state with spins i..j flipped: two domain walls."""
    idx = excitation_index(basis.N, i, j)
    return StateVector.basis_state(1 << basis.N, idx, f"chain:N={basis.N}")


def embed_local(n: int, sites, mat, hermitian_flag: bool = False,
                basis_tag: str = "") -> SparseOperator:
    """Lift an operator on the given sites (1-based, distinct) to the full
    2^n space, identity elsewhere."""
    _require_exact(n)
    sites = tuple(sites)
    if len(set(sites)) != len(sites):
        raise ValueError("sites must be distinct")
    for s in sites:
        if not 1 <= s <= n:
            raise ValueError(f"site {s} out of range 1..{n}")
    k = len(sites)
    local = sp.coo_matrix(np.asarray(mat, dtype=complex) if not sp.issparse(mat) else mat)
    if local.shape != (1 << k, 1 << k):
        raise ValueError(f"matrix shape {local.shape} does not fit {k} site(s)")

    # Bit s-1 of the full index holds site s; bit t of a local index holds
    # sites[t].  Rest bits enumerate every configuration of the other sites.
    positions = [s - 1 for s in sites]
    rest_positions = [b for b in range(n) if b not in positions]
    rest = np.zeros(1 << len(rest_positions), dtype=np.int64)
    m = np.arange(1 << len(rest_positions), dtype=np.int64)
    for t, b in enumerate(rest_positions):
        rest |= ((m >> t) & 1) << b

    def spread(local_idx: int) -> int:
        out = 0
        for t, b in enumerate(positions):
            out |= ((local_idx >> t) & 1) << b
        return out

    rows, cols, vals = [], [], []
    for a, b, v in zip(local.row.tolist(), local.col.tolist(), local.data.tolist()):
        rows.append(spread(a) | rest)
        cols.append(spread(b) | rest)
        vals.append(np.full(rest.size, v, dtype=complex))
    dim = 1 << n
    full = sp.coo_matrix(
        (np.concatenate(vals) if vals else np.zeros(0, dtype=complex),
         (np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64),
          np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64))),
        shape=(dim, dim)).tocsr()
    return SparseOperator.from_matrix(full, hermitian_flag=hermitian_flag,
                                      basis_tag=basis_tag)


def local_sigma_x(N: int, site: int, basis_tag: str = "") -> SparseOperator:
    """sigma_x on one site, identity elsewhere; unitary and Hermitian."""
    if not 1 <= site <= N:
        raise ValueError(f"site {site} out of range 1..{N}")
    return embed_local(N, (site,), SIGMA_X, hermitian_flag=True,
                       basis_tag=basis_tag or f"chain:N={N}")


def ground_projector(N: int, basis_tag: str = "") -> SparseOperator:
    """|g><g| on the full chain space."""
    _require_exact(N)
    dim = 1 << N
    mat = sp.coo_matrix(([1.0 + 0.0j], ([0], [0])), shape=(dim, dim)).tocsr()
    return SparseOperator.from_matrix(mat, hermitian_flag=True,
                                      basis_tag=basis_tag or f"chain:N={N}")
