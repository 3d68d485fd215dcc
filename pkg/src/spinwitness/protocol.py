"""Exact statevector execution of the two-ancilla entangling protocol.

Both ancillas start in |+>, one controls a local unitary U1 before the
chain evolves for a time tau, the other controls a local unitary U2 after,
and the chain is post-selected on a projector P.  Expanding the controls
over the four ancilla basis states |ij> (first index = ancilla A, the one
acting first) gives four chain-sized branch vectors

    |psi_ij> = (U2)^j V_tau (U1)^i |psi0>,

and the post-selected two-qubit state

    rho[ij, i'j'] = <psi_{i'j'}| P |psi_ij> / (4 p),
    p = (1/4) sum_ij <psi_ij| P |psi_ij>.

The 1/4 comes from the |++> preparation; with it Tr rho = 1 exactly.
run_protocol computes rho from the four branches without ever forming the
(4 * 2^N)-dimensional joint space; run_protocol_joint_oracle does form it,
by an entirely separate construction, so tests can compare the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import ising
from .entanglement import AncillaDensityMatrix
from .linalg import (ATOL_NORM, SparseOperator, StateVector, apply, expm_apply,
                     inner)

# Ancilla pair basis order everywhere: |00>, |01>, |10>, |11>.
BRANCH_ORDER = ((0, 0), (0, 1), (1, 0), (1, 1))


class PostSelectionError(RuntimeError):
    """Raised when the projector annihilates every branch; carries the raw
    Gram matrix so callers can inspect what was left."""

    def __init__(self, message: str, gram: np.ndarray):
        super().__init__(message)
        self.gram = gram


@dataclass(frozen=True)
class LocalOperator:
    """An operator supported on an explicit tuple of sites (1-based).

    Keeping the support explicit makes 'acts as identity elsewhere' true by
    construction and lets the single-ancilla module reason about locality
    structurally.
    """

    sites: tuple
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        mat = np.array(self.matrix, dtype=complex)
        k = len(self.sites)
        if mat.shape != (1 << k, 1 << k):
            raise ValueError(f"matrix shape {mat.shape} does not fit {k} site(s)")
        object.__setattr__(self, "matrix", mat)

    def is_unitary(self, atol: float = ATOL_NORM) -> bool:
        eye = np.eye(self.matrix.shape[0])
        return bool(np.allclose(self.matrix.conj().T @ self.matrix, eye, atol=atol))

    def is_projector(self, atol: float = ATOL_NORM) -> bool:
        m = self.matrix
        return bool(np.allclose(m, m.conj().T, atol=atol)
                    and np.allclose(m @ m, m, atol=atol))

    def embed(self, n: int, basis_tag: str = "") -> SparseOperator:
        return ising.embed_local(n, self.sites, self.matrix, basis_tag=basis_tag)


def _check_projector(P: SparseOperator) -> None:
    resid_h = abs(P.matrix - P.matrix.conj().T)
    resid_i = abs(P.matrix @ P.matrix - P.matrix)
    bad_h = resid_h.max() if resid_h.nnz else 0.0
    bad_i = resid_i.max() if resid_i.nnz else 0.0
    if bad_h > ATOL_NORM or bad_i > ATOL_NORM:
        raise ValueError(
            f"P must be an orthogonal projector (hermiticity residual {bad_h:.2e}, "
            f"idempotency residual {bad_i:.2e})")


@dataclass(eq=False)
class ProtocolSpec:
    """Everything one protocol run needs.

    hamiltonian may be any Hermitian operator on the n-site space, not just
    the Ising chain: the protocol itself is model-agnostic.
    """

    n_sites: int
    hamiltonian: SparseOperator
    u1: LocalOperator
    u2: LocalOperator
    projector: SparseOperator
    tau: float
    params: ising.IsingParams | None = field(default=None)

    def __post_init__(self):
        dim = 1 << self.n_sites
        if self.hamiltonian.dim != dim or self.projector.dim != dim:
            raise ValueError("operator dimensions do not match 2^n_sites")
        if not self.hamiltonian.hermitian_flag:
            raise ValueError("hamiltonian must be constructed as Hermitian")
        if not np.isfinite(self.tau):
            raise ValueError("tau must be finite")
        if not self.u1.is_unitary() or not self.u2.is_unitary():
            raise ValueError("U1 and U2 must be unitary to 1e-10")
        _check_projector(self.projector)

    @cached_property
    def embedded_u1(self) -> SparseOperator:
        return self.u1.embed(self.n_sites, self.hamiltonian.basis_tag)

    @cached_property
    def embedded_u2(self) -> SparseOperator:
        return self.u2.embed(self.n_sites, self.hamiltonian.basis_tag)

    def propagate(self, v: StateVector, method: str = "auto") -> StateVector:
        return expm_apply(self.hamiltonian, v, self.tau, method=method)


@dataclass(frozen=True)
class ProtocolOutcome:
    rho: AncillaDensityMatrix
    p_select: float
    branches: dict


def branch_states(spec: ProtocolSpec, psi0: StateVector, method: str = "auto") -> dict:
    """The four |psi_ij>, keyed by (i, j)."""
    pre = {0: psi0, 1: apply(spec.embedded_u1, psi0)}
    evolved = {i: spec.propagate(v, method=method) for i, v in pre.items()}
    out = {}
    for i, j in BRANCH_ORDER:
        out[(i, j)] = apply(spec.embedded_u2, evolved[i]) if j else evolved[i]
    return out


def run_protocol(spec: ProtocolSpec, psi0: StateVector,
                 method: str = "auto") -> ProtocolOutcome:
    """Branch-decomposition evaluation of the post-selected ancilla state."""
    if abs(psi0.norm() - 1.0) > 1e-8:
        raise ValueError("psi0 must be normalized")
    branches = branch_states(spec, psi0, method=method)
    projected = np.column_stack(
        [apply(spec.projector, branches[k]).amplitudes for k in BRANCH_ORDER])
    gram = projected.conj().T @ projected
    p_select = float(np.trace(gram).real) / 4.0
    if p_select < 1e-12:
        raise PostSelectionError(
            f"post-selection impossible: p = {p_select:.3e}", gram)
    # gram[a, b] = <P psi_a | P psi_b>; rho[a, b] = <psi_b| P |psi_a> = gram[b, a].
    rho = AncillaDensityMatrix(gram.T / (4.0 * p_select))
    return ProtocolOutcome(rho=rho, p_select=p_select, branches=branches)


def run_protocol_joint_oracle(spec: ProtocolSpec, psi0: StateVector) -> tuple:
    """Same quantity by brute force on the (2 ancillas x chain) joint space.

    Builds |++>|psi0>, applies the controlled gates and the propagator as
    joint-space operators, projects, normalizes, and traces out the chain.
    Deliberately shares no code path with run_protocol.
    """
    n = spec.n_sites
    dim = 1 << n
    eye = sp.identity(dim, dtype=complex, format="csr")
    p0 = sp.csr_matrix(np.array([[1, 0], [0, 0]], dtype=complex))
    p1 = sp.csr_matrix(np.array([[0, 0], [0, 1]], dtype=complex))
    eye2 = sp.identity(2, dtype=complex, format="csr")

    u1_full = spec.embedded_u1.matrix
    u2_full = spec.embedded_u2.matrix
    # Joint ordering: ancilla A (high bit), ancilla B, then the chain.
    c_u1 = sp.kron(p0, sp.kron(eye2, eye)) + sp.kron(p1, sp.kron(eye2, u1_full))
    c_u2 = sp.kron(eye2, sp.kron(p0, eye)) + sp.kron(eye2, sp.kron(p1, u2_full))
    h_joint = SparseOperator.from_matrix(
        sp.kron(sp.identity(4, dtype=complex, format="csr"),
                spec.hamiltonian.matrix).tocsr(),
        hermitian_flag=True, basis_tag="joint")

    plus_pair = np.full(4, 0.5, dtype=complex)
    state = np.kron(plus_pair, psi0.amplitudes)
    state = c_u1 @ state
    state = expm_apply(h_joint, StateVector(state, "joint"), spec.tau).amplitudes
    state = c_u2 @ state
    state = sp.kron(sp.identity(4, dtype=complex, format="csr"),
                    spec.projector.matrix) @ state
    p_select = float(np.vdot(state, state).real)
    if p_select < 1e-12:
        raise PostSelectionError(
            f"post-selection impossible: p = {p_select:.3e}", np.zeros((4, 4)))
    blocks = (state / np.sqrt(p_select)).reshape(4, dim)
    rho = blocks @ blocks.conj().T
    return rho, p_select


def toy_protocol_spec(p: ising.IsingParams, tau: float) -> ProtocolSpec:
    """The chain instance: U1 flips spin 2, U2 flips spin N-1, P = |g><g|."""
    return ProtocolSpec(
        n_sites=p.N,
        hamiltonian=ising.build_hamiltonian(p),
        u1=LocalOperator((2,), ising.SIGMA_X),
        u2=LocalOperator((p.N - 1,), ising.SIGMA_X),
        projector=ising.ground_projector(p.N),
        tau=tau,
        params=p,
    )


def toy_protocol_state(p: ising.IsingParams, tau: float) -> tuple:
    """(r, rho, p_select) for the chain instance started from |g>.

    r is the post-selected off-diagonal <g| sigma_x(N-1) V_tau sigma_x(2) |g>,
    the exact-engine counterpart of the walk's transfer amplitude.
    """
    spec = toy_protocol_spec(p, tau)
    psi0 = ising.ground_state(p)
    outcome = run_protocol(spec, psi0)
    r = inner(psi0, outcome.branches[(1, 1)])
    return r, outcome.rho, outcome.p_select


def purity_and_fidelity(rho: AncillaDensityMatrix) -> tuple:
    """Tr rho^2, and the best overlap with the ideal post-selected family
    (a|00> + c|11>) over all amplitude pairs (phase and weight analytic)."""
    m = rho.entries
    purity = float(np.trace(m @ m).real)
    a = m[0, 0].real
    b = m[3, 3].real
    c = abs(m[0, 3])
    fidelity = 0.5 * (a + b) + np.sqrt(0.25 * (a - b) ** 2 + c ** 2)
    return purity, float(fidelity)
