"""Entanglement tests for the post-selected ancilla pair.

For two qubits the partial-transpose criterion is exact: rho is entangled
if and only if rho^Gamma has a negative eigenvalue.  A negative principal
minor of rho^Gamma is a sufficient certificate, and the specific 2x2 minor
on the |01>, |10> block is what the protocol's inequality

    <V+ U2+ P U2 V> <U1+ V+ P V U1>  <  |<V+ P U2 V U1>|^2

reproduces: evaluated on the pre-measurement chain state, the two sides
equal (4p)^2 times the minor's two products, so violation of the
inequality is exactly a negative minor.  evaluate_inequality computes the
three expectation values directly from chain-sized vectors, never touching
the ancillas; that is the point of the construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (ATOL_NORM, PSD_FLOOR, STRICT_TOL, StateVector, apply,
                     inner)

# Ancilla pair basis |00>, |01>, |10>, |11>; first index is ancilla A.
BASIS_LABELS = ("00", "01", "10", "11")


class AncillaDensityMatrix:
    """4x4 density matrix of the two ancillas, validated on construction."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        m = np.array(entries, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError("ancilla density matrix must be 4x4")
        if np.max(np.abs(m - m.conj().T)) > ATOL_NORM:
            raise ValueError("density matrix must be Hermitian to 1e-10")
        if abs(np.trace(m).real - 1.0) > ATOL_NORM or abs(np.trace(m).imag) > ATOL_NORM:
            raise ValueError("density matrix must have unit trace")
        if float(np.linalg.eigvalsh(m)[0]) < PSD_FLOOR:
            raise ValueError("density matrix must be positive semidefinite")
        self.entries = m

    def __repr__(self):
        return f"AncillaDensityMatrix(diag={np.round(np.diag(self.entries).real, 6)})"


@dataclass(frozen=True)
class InequalityReport:
    lhs_term_1: float
    lhs_term_2: float
    rhs: float
    violated: bool
    margin: float


def partial_transpose(rho: AncillaDensityMatrix) -> np.ndarray:
    """Transpose on the second ancilla: out[i j, i' j'] = rho[i j', i' j]."""
    m = rho.entries if isinstance(rho, AncillaDensityMatrix) else np.asarray(rho)
    return m.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def is_entangled_ppt(rho: AncillaDensityMatrix) -> tuple:
    """(entangled, min eigenvalue of rho^Gamma, negativity).

    Exact for a pair of qubits: a negative partial-transpose eigenvalue is
    necessary and sufficient.
    """
    evals = np.linalg.eigvalsh(partial_transpose(rho))
    min_eig = float(evals[0])
    negativity = float(-np.sum(evals[evals < 0.0]))
    return min_eig < PSD_FLOOR, min_eig, negativity


def sylvester_minor(rho: AncillaDensityMatrix) -> tuple:
    """The principal minor of rho^Gamma on the {|01>, |10>} block.

    A negative value certifies a negative eigenvalue (sufficient, not
    necessary, for entanglement); this is the certificate the protocol's
    inequality measures.
    """
    pt = partial_transpose(rho)
    minor = float((pt[1, 1] * pt[2, 2] - pt[1, 2] * pt[2, 1]).real)
    return minor, minor < -STRICT_TOL


def evaluate_inequality(spec, psi0: StateVector) -> InequalityReport:
    """Evaluate both sides of the entanglement inequality from chain-sized
    statevectors only (no ancillas, no density matrix).

    spec is a protocol description exposing embedded_u1, embedded_u2,
    projector, and propagate(); see protocol.ProtocolSpec.
    """
    v_psi = spec.propagate(psi0)
    v_u1_psi = spec.propagate(apply(spec.embedded_u1, psi0))
    u2_v_psi = apply(spec.embedded_u2, v_psi)
    u2_v_u1_psi = apply(spec.embedded_u2, v_u1_psi)

    lhs_term_1 = inner(u2_v_psi, apply(spec.projector, u2_v_psi)).real
    lhs_term_2 = inner(v_u1_psi, apply(spec.projector, v_u1_psi)).real
    rhs = abs(inner(v_psi, apply(spec.projector, u2_v_u1_psi))) ** 2
    margin = rhs - lhs_term_1 * lhs_term_2
    violated = lhs_term_1 * lhs_term_2 < rhs - STRICT_TOL
    return InequalityReport(lhs_term_1=float(lhs_term_1),
                            lhs_term_2=float(lhs_term_2),
                            rhs=float(rhs), violated=bool(violated),
                            margin=float(margin))
