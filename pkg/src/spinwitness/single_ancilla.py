"""Measuring the protocol's overlap with one ancilla instead of two.

The inequality's right-hand side <V+ P U2 V U1> looks like it needs both
controlled unitaries, but a single control qubit suffices.  Prepare

    |phi>  = (|0> V|psi> + |1> U2 V U1|psi>) / sqrt(2)

and the overlap is <sigma_x x P> + i <sigma_y x P>.  Better still, when the
projector factorizes as P = P2 x P_1E x 1 (P2 on U2's region), split
P2 U2 = B_plus + i B_minus into Hermitian parts and prepare

    |phi'> = (|0> V|psi> + |1> V U1|psi>) / sqrt(2),

which touches U2's region only through the final Hermitian observables:

    <V+ P U2 V U1> = <sx x B+ - sy x B-> + i <sx x B- + sy x B+>

with B+- extended by P_1E on the rest of the chain.  The same trick entry
by entry reconstructs the full 4x4 ancilla-pair density matrix from
chain-only expectation values (tomography_from_expectations).

Everything here evaluates exact expectation values; shot sampling is out
of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import ising
from .entanglement import AncillaDensityMatrix
from .linalg import (ATOL_NORM, SparseOperator, StateVector, apply,
                     expectation, inner)
from .protocol import BRANCH_ORDER, LocalOperator, PostSelectionError, ProtocolSpec

_SX = ising.SIGMA_X
_SY = ising.SIGMA_Y


@dataclass(frozen=True)
class ObservableDecomposition:
    """Hermitian split of a projected unitary P2 U2 on one site region.

    B_plus + i B_minus = P2 U2; p_rest is the projector factor on the rest
    of the chain (None when the full projector does not factorize, in which
    case the single-control reduction is unavailable).
    """

    b_plus: LocalOperator
    b_minus: LocalOperator
    p_rest: LocalOperator | None = None

    def __post_init__(self):
        for part in (self.b_plus, self.b_minus):
            if np.max(np.abs(part.matrix - part.matrix.conj().T)) > ATOL_NORM:
                raise ValueError("decomposition parts must be Hermitian")
        if self.b_plus.sites != self.b_minus.sites:
            raise ValueError("decomposition parts must share a site region")


def decompose_projected_unitary(p2: LocalOperator, u2: LocalOperator,
                                p_rest: LocalOperator | None = None
                                ) -> ObservableDecomposition:
    """Split P2 U2 into Hermitian and anti-Hermitian-over-i parts."""
    if p2.sites != u2.sites:
        raise ValueError(
            f"projector region {p2.sites} does not match unitary region {u2.sites}")
    if not p2.is_projector():
        raise ValueError("P2 must be an orthogonal projector")
    if not u2.is_unitary():
        raise ValueError("U2 must be unitary")
    m = p2.matrix @ u2.matrix
    b_plus = 0.5 * (m + m.conj().T)
    b_minus = (m - m.conj().T) / 2.0j
    if np.max(np.abs(b_plus + 1.0j * b_minus - m)) > 1e-12:
        raise AssertionError("reconstruction B+ + iB- = P2 U2 failed")
    return ObservableDecomposition(
        b_plus=LocalOperator(p2.sites, b_plus),
        b_minus=LocalOperator(p2.sites, b_minus),
        p_rest=p_rest)


def _joint(anc0: StateVector, anc1: StateVector) -> StateVector:
    """(|0> x anc0 + |1> x anc1)/sqrt(2) with the ancilla as the high bit."""
    amps = np.concatenate([anc0.amplitudes, anc1.amplitudes]) / np.sqrt(2.0)
    return StateVector(amps, f"ancilla*{anc0.basis_tag}")


def _pauli_times(pauli: np.ndarray, M) -> SparseOperator:
    mat = M.matrix if isinstance(M, SparseOperator) else sp.csr_matrix(M)
    return SparseOperator.from_matrix(sp.kron(sp.csr_matrix(pauli), mat).tocsr(),
                                      hermitian_flag=True)


def dual_control_state(spec: ProtocolSpec, psi0: StateVector) -> StateVector:
    """|phi>: the ancilla controls both unitaries."""
    u = spec.propagate(psi0)
    w = apply(spec.embedded_u2, spec.propagate(apply(spec.embedded_u1, psi0)))
    return _joint(u, w)


def single_control_state(spec: ProtocolSpec, psi0: StateVector) -> StateVector:
    """|phi'>: the ancilla controls only the early unitary.

    Nothing supported on U2's region is applied here; U2 enters later only
    through the Hermitian observables of the decomposition.
    """
    u = spec.propagate(psi0)
    w = spec.propagate(apply(spec.embedded_u1, psi0))
    return _joint(u, w)


def overlap_via_dual_control(spec: ProtocolSpec, psi0: StateVector) -> complex:
    """<V+ P U2 V U1> from two ancilla observables on |phi>."""
    phi = dual_control_state(spec, psi0)
    re = expectation(_pauli_times(_SX, spec.projector), phi).real
    im = expectation(_pauli_times(_SY, spec.projector), phi).real
    return complex(re, im)


def overlap_via_single_control(spec: ProtocolSpec, psi0: StateVector,
                               decomp: ObservableDecomposition) -> complex:
    """<V+ P U2 V U1> from four ancilla observables on |phi'>.

    Requires the factorized projector: P = P2 x P_rest with P2 on the
    unitary's region.
    """
    if decomp.p_rest is None:
        raise ValueError(
            "single-control reduction needs the projector in factorized form "
            "(P2 on the controlled region times a projector on the rest); "
            "supply p_rest in the decomposition")
    if set(decomp.b_plus.sites) & set(decomp.p_rest.sites):
        raise ValueError("projector factors must live on disjoint site regions")
    n = spec.n_sites
    rest = decomp.p_rest.embed(n)
    m_plus = SparseOperator.from_matrix(
        (decomp.b_plus.embed(n).matrix @ rest.matrix).tocsr(), hermitian_flag=True)
    m_minus = SparseOperator.from_matrix(
        (decomp.b_minus.embed(n).matrix @ rest.matrix).tocsr(), hermitian_flag=True)
    phi = single_control_state(spec, psi0)
    sx_p = expectation(_pauli_times(_SX, m_plus), phi).real
    sy_p = expectation(_pauli_times(_SY, m_plus), phi).real
    sx_m = expectation(_pauli_times(_SX, m_minus), phi).real
    sy_m = expectation(_pauli_times(_SY, m_minus), phi).real
    return complex(sx_p - sy_m, sx_m + sy_p)


def direct_overlap(spec: ProtocolSpec, psi0: StateVector) -> complex:
    """<V psi | P | U2 V U1 psi>, the plain pipeline both reductions target."""
    u = spec.propagate(psi0)
    w = apply(spec.embedded_u2, spec.propagate(apply(spec.embedded_u1, psi0)))
    return inner(u, apply(spec.projector, w))


def toy_projector_factors(N: int) -> tuple:
    """|g><g| split as |0><0| on site N-1 times |0...0><0...0| on the rest."""
    p2 = LocalOperator((N - 1,), np.array([[1.0, 0.0], [0.0, 0.0]]))
    rest_sites = tuple(s for s in range(1, N + 1) if s != N - 1)
    rest_mat = np.zeros((1 << len(rest_sites), 1 << len(rest_sites)))
    rest_mat[0, 0] = 1.0
    return p2, LocalOperator(rest_sites, rest_mat)


def _pipeline_state(spec: ProtocolSpec, psi0: StateVector, i: int, j: int) -> StateVector:
    v = apply(spec.embedded_u1, psi0) if i else psi0
    v = spec.propagate(v)
    return apply(spec.embedded_u2, v) if j else v


def tomography_from_expectations(spec: ProtocolSpec,
                                 psi0: StateVector) -> AncillaDensityMatrix:
    """Assemble the full post-selected ancilla-pair density matrix from the
    sixteen chain-only expectation values

        <psi| (U1+)^i' V+ (U2+)^j' P (U2)^j V (U1)^i |psi>,

    one per entry (upper triangle measured, lower filled by conjugation).
    Agreement with run_protocol's branch construction is a cross-module
    consistency check, not a tautology: this path never forms the Gram
    matrix.
    """
    forward = [_pipeline_state(spec, psi0, i, j) for (i, j) in BRANCH_ORDER]
    projected = [apply(spec.projector, f) for f in forward]
    raw = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for b in range(a, 4):
            # <psi_b| P |psi_a> with row index a = (i,j), column b = (i',j').
            raw[a, b] = inner(forward[b], projected[a])
            if b != a:
                raw[b, a] = np.conj(raw[a, b])
    p_select = float(np.trace(raw).real) / 4.0
    if p_select < 1e-12:
        raise PostSelectionError(
            f"post-selection impossible: p = {p_select:.3e}", raw)
    return AncillaDensityMatrix(raw / (4.0 * p_select))
