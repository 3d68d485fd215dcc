"""Continuous-time quantum walk of the two-domain-wall excitation.

For B/J << 1 the flipped-block states |e_{i,j}> form a nearly closed
manifold: the transverse field hops either block edge by one site while the
coupling energy (a constant 4J on the manifold) only contributes a global
phase.  Projecting the field term onto the manifold gives a walk on the
triangle 2 <= i <= j <= N-1 with hop amplitude B and zero diagonal.

The quantity of interest is the transfer amplitude

    r(tau) = <e_{N-1,N-1}| exp(-i H_walk tau) |e_{2,2}>

whose first-arrival peak sets the protocol's operating time.  The module
also evaluates the same amplitude in the exact 2^N engine so the projection
error can be measured directly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ising
from .linalg import SparseOperator, StateVector, expm_apply

DEFAULT_WINDOW_FACTOR = 1.5
DEFAULT_DTAU_FACTOR = 0.05


@dataclass(frozen=True)
class WalkHamiltonian:
    basis: ising.DomainWallBasis
    matrix: SparseOperator
    hop_amplitude: float
    params: ising.IsingParams


@dataclass(frozen=True)
class WalkTrace:
    params: ising.IsingParams
    tau_grid: np.ndarray
    r_values: np.ndarray
    tau_peak: float
    r_peak: complex

    @property
    def abs_r_peak(self) -> float:
        return abs(self.r_peak)


@dataclass(frozen=True)
class SweepPoint:
    N: int
    tau_peak: float
    abs_r_peak: float
    window_factor: float
    dtau: float


def build_walk_hamiltonian(p: ising.IsingParams) -> WalkHamiltonian:
    """Hop matrix on the (i, j) triangle: amplitude B between pairs that
    differ by one in exactly one coordinate, zero elsewhere (open edges)."""
    basis = ising.DomainWallBasis(p.N)
    entries = []
    for k, (i, j) in enumerate(basis.pairs):
        for ni, nj in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if 2 <= ni <= nj <= p.N - 1:
                entries.append((k, basis.index_of(ni, nj), p.B + 0.0j))
    mat = SparseOperator(basis.size, entries, hermitian_flag=True,
                         basis_tag=basis.tag())
    return WalkHamiltonian(basis=basis, matrix=mat, hop_amplitude=p.B, params=p)


def _source_state(H: WalkHamiltonian) -> StateVector:
    return StateVector.basis_state(H.basis.size, H.basis.index_of(2, 2),
                                   H.basis.tag())


def _refine_peak(taus, abs_r, k, dtau):
    """Parabola through the grid maximum and its neighbors; ties already
    resolved toward the smallest tau by the first-occurrence argmax."""
    if 0 < k < len(abs_r) - 1:
        denom = abs_r[k - 1] - 2.0 * abs_r[k] + abs_r[k + 1]
        if abs(denom) > 1e-300:
            delta = 0.5 * dtau * (abs_r[k - 1] - abs_r[k + 1]) / denom
            return taus[k] + float(np.clip(delta, -0.5 * dtau, 0.5 * dtau))
    return taus[k]


def propagate_walk(H: WalkHamiltonian, tau_max: float, dtau: float) -> WalkTrace:
    """Sample r(tau) on a uniform grid from tau = 0 and locate its peak."""
    B = H.hop_amplitude
    if not (tau_max > 0 and dtau > 0):
        raise ValueError("tau_max and dtau must be positive")
    if dtau > 0.5 / B:
        raise ValueError(f"dtau = {dtau:g} too coarse: must be <= 0.5/B = {0.5 / B:g}")
    basis = H.basis
    target = basis.index_of(basis.N - 1, basis.N - 1)
    taus = dtau * np.arange(int(np.floor(tau_max / dtau + 1e-9)) + 1)
    state = _source_state(H)
    r_values = np.empty(taus.size, dtype=complex)
    r_values[0] = state.amplitudes[target]
    for n in range(1, taus.size):
        state = expm_apply(H.matrix, state, dtau)
        r_values[n] = state.amplitudes[target]
    abs_r = np.abs(r_values)
    k = int(np.argmax(abs_r))
    tau_peak = _refine_peak(taus, abs_r, k, dtau)
    if tau_peak != taus[k]:
        refined = expm_apply(H.matrix, _source_state(H), tau_peak)
        r_peak = complex(refined.amplitudes[target])
    else:
        r_peak = complex(r_values[k])
    return WalkTrace(params=H.params, tau_grid=taus, r_values=r_values,
                     tau_peak=float(tau_peak), r_peak=r_peak)


def occupation_heatmap(H: WalkHamiltonian, taus) -> tuple:
    """Occupation probabilities per (i, j) at each requested time.

    Returns (sorted tau array, probability array of shape (len(taus), size)).
    """
    taus = np.asarray(sorted(float(t) for t in taus))
    if taus.size and taus[0] < 0:
        raise ValueError("times must be nonnegative")
    state = _source_state(H)
    probs = np.empty((taus.size, H.basis.size))
    prev = 0.0
    for n, tau in enumerate(taus):
        if tau > prev:
            state = expm_apply(H.matrix, state, tau - prev)
            prev = tau
        probs[n] = np.abs(state.amplitudes) ** 2
    return taus, probs


def support_radius(probabilities: np.ndarray, basis: ising.DomainWallBasis,
                   threshold: float = 1e-3) -> int:
    """How far from the seed corner (2, 2) the occupation has spread."""
    radius = 0
    for k, (i, j) in enumerate(basis.pairs):
        if probabilities[k] > threshold:
            radius = max(radius, i - 2, j - 2)
    return radius


def _sweep_one(N: int, B: float, J: float, window_factor: float,
               dtau_factor: float) -> SweepPoint:
    p = ising.IsingParams(N, B, J)
    H = build_walk_hamiltonian(p)
    trace = propagate_walk(H, window_factor * N / B, dtau_factor / B)
    return SweepPoint(N=N, tau_peak=trace.tau_peak, abs_r_peak=trace.abs_r_peak,
                      window_factor=window_factor, dtau=dtau_factor / B)


def peak_scaling_sweep(N_list, B: float, J: float,
                       tau_window_factor: float = DEFAULT_WINDOW_FACTOR,
                       dtau_factor: float = DEFAULT_DTAU_FACTOR,
                       max_workers: int | None = None) -> list:
    """Peak transfer data per chain length, in input order.

    Instances are independent; they run in a thread pool and are merged
    back deterministically by position.
    """
    N_list = list(N_list)
    if max_workers is not None and max_workers > 1 and len(N_list) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(
                lambda N: _sweep_one(N, B, J, tau_window_factor, dtau_factor),
                N_list))
    return [_sweep_one(N, B, J, tau_window_factor, dtau_factor) for N in N_list]


def exact_transfer_trace(p: ising.IsingParams, taus) -> np.ndarray:
    """<g| sigma_x(N-1) exp(-i H tau) |e_{2,2}> in the full 2^N engine.

    This is the quantity the walk's r(tau) approximates; taus must be
    nondecreasing.
    """
    taus = np.asarray([float(t) for t in taus])
    if taus.size and (np.any(np.diff(taus) < 0) or taus[0] < 0):
        raise ValueError("times must be nonnegative and nondecreasing")
    H = ising.build_hamiltonian(p)
    basis = ising.DomainWallBasis(p.N)
    state = ising.excitation_state(basis, 2, 2)
    target = ising.excitation_index(p.N, p.N - 1, p.N - 1)
    out = np.empty(taus.size, dtype=complex)
    prev = 0.0
    for n, tau in enumerate(taus):
        if tau > prev:
            state = expm_apply(H, state, tau - prev)
            prev = tau
        out[n] = state.amplitudes[target]
    return out
