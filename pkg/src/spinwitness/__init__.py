"""Entangling distant ancilla qubits through a spin chain.

Simulation library and experiment CLI for a post-selected protocol that
entangles two ancilla qubits via local interactions with a transverse-field
Ising chain, together with the chain-only inequality that witnesses the
entanglement.
"""

from .entanglement import (AncillaDensityMatrix, InequalityReport,
                           evaluate_inequality, is_entangled_ppt,
                           partial_transpose, sylvester_minor)
from .ising import DomainWallBasis, IsingParams, build_hamiltonian, ground_state
from .linalg import SparseOperator, StateVector, apply, expm_apply, inner
from .protocol import (LocalOperator, PostSelectionError, ProtocolOutcome,
                       ProtocolSpec, run_protocol, toy_protocol_spec,
                       toy_protocol_state)
from .walk import (WalkHamiltonian, WalkTrace, build_walk_hamiltonian,
                   exact_transfer_trace, occupation_heatmap, peak_scaling_sweep,
                   propagate_walk)

__version__ = "0.1.0"

__all__ = [
    "AncillaDensityMatrix", "DomainWallBasis", "InequalityReport",
    "IsingParams", "LocalOperator", "PostSelectionError", "ProtocolOutcome",
    "ProtocolSpec", "SparseOperator", "StateVector", "WalkHamiltonian",
    "WalkTrace", "apply", "build_hamiltonian", "build_walk_hamiltonian",
    "evaluate_inequality", "exact_transfer_trace", "expm_apply",
    "ground_state", "inner", "is_entangled_ppt", "occupation_heatmap",
    "partial_transpose", "peak_scaling_sweep", "propagate_walk",
    "run_protocol", "sylvester_minor", "toy_protocol_spec",
    "toy_protocol_state",
]
