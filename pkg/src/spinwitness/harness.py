"""Experiment CLI: runs the engines against named experiment recipes and
writes CSV files with stable schemas.

Times in every CSV are dimensionless: the `tau`-like columns hold tau*B
(and `dtau` holds dtau*B), so peak-time scaling can be read straight off
the output regardless of the field strength used.

Exit codes: 0 success, 1 engine failure, 2 bad usage or configuration.
Re-running with identical configuration reproduces the CSV body byte for
byte; the only timestamp lives in the leading comment line.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import ising, walk
from .entanglement import (BASIS_LABELS, evaluate_inequality, is_entangled_ppt,
                           sylvester_minor)
from .linalg import StateVector, expm_apply
from .protocol import (run_protocol, run_protocol_joint_oracle,
                       toy_protocol_spec, toy_protocol_state,
                       purity_and_fidelity, LocalOperator, ProtocolSpec)
from .single_ancilla import (decompose_projected_unitary, direct_overlap,
                             overlap_via_dual_control,
                             overlap_via_single_control,
                             tomography_from_expectations,
                             toy_projector_factors)

EXPERIMENTS = ("walk-sweep", "heatmap", "exact-protocol", "inequality",
               "tomography", "crosscheck")

DEFAULT_N_LIST = (8, 16, 24, 32, 40, 48)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def linear_fit(points) -> FitResult:
    """Ordinary least squares through a list of (x, y) pairs."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points for a fit")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("fit is degenerate: all x values coincide")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope=slope, intercept=intercept, r_squared=r_squared,
                     n_points=len(pts))


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 8
    n_list: tuple = DEFAULT_N_LIST
    b: float = 0.1
    j: float = 1.0
    tau_b: float | None = None
    window_factor: float = walk.DEFAULT_WINDOW_FACTOR
    dtau_b: float = walk.DEFAULT_DTAU_FACTOR
    tau_fractions: tuple = (0.1, 0.5, 1.0)
    tau_b_step: float = 0.25
    out: str | None = None
    threads: int = 1
    seed: int = 7
    tol: float = 1e-9

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not (self.b > 0 and self.j > 0):
            raise ValueError("B and J must be positive")
        if self.n < 4 or any(n < 4 for n in self.n_list):
            raise ValueError("chain length must be at least 4")
        if self.dtau_b <= 0 or self.dtau_b > 0.5:
            raise ValueError("dtau (in units of 1/B) must be in (0, 0.5]")
        if self.window_factor <= 0:
            raise ValueError("window factor must be positive")
        if self.tau_b is not None and self.tau_b < 0:
            raise ValueError("tau must be nonnegative")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def out_path(self) -> str:
        return self.out or f"{self.experiment}.csv"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def write_csv(path: str, experiment: str, header, rows) -> None:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    lines = [f"# spinwitness {experiment} written {stamp}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _walk_peak(n: int, cfg: ExperimentConfig) -> walk.SweepPoint:
    return walk.peak_scaling_sweep([n], cfg.b, cfg.j, cfg.window_factor,
                                   cfg.dtau_b)[0]


def _resolve_tau_b(cfg: ExperimentConfig, n: int) -> float:
    """tau*B to run at: explicit value, or the walk engine's peak time."""
    if cfg.tau_b is not None:
        return cfg.tau_b
    return _walk_peak(n, cfg).tau_peak * cfg.b


def run_walk_sweep(cfg: ExperimentConfig):
    points = walk.peak_scaling_sweep(cfg.n_list, cfg.b, cfg.j,
                                     cfg.window_factor, cfg.dtau_b,
                                     max_workers=cfg.threads)
    points = sorted(points, key=lambda s: s.N)
    header = ["N", "B", "J", "tau_peak", "abs_r_peak", "window_factor", "dtau"]
    rows = [[s.N, cfg.b, cfg.j, s.tau_peak * cfg.b, s.abs_r_peak,
             s.window_factor, cfg.dtau_b] for s in points]
    log = []
    if len(points) >= 3:
        inv = linear_fit([(s.N, 1.0 / s.abs_r_peak) for s in points])
        tb = linear_fit([(s.N, s.tau_peak * cfg.b) for s in points])
        log.append(f"fit abs_r_inv: slope={inv.slope:.10f} "
                   f"intercept={inv.intercept:.10f} "
                   f"r_squared={inv.r_squared:.10f} n_points={inv.n_points}")
        log.append(f"fit tau_peak_b: slope={tb.slope:.10f} "
                   f"intercept={tb.intercept:.10f} "
                   f"r_squared={tb.r_squared:.10f} n_points={tb.n_points}")
    return header, rows, log


def run_heatmap(cfg: ExperimentConfig):
    p = ising.IsingParams(cfg.n, cfg.b, cfg.j)
    H = walk.build_walk_hamiltonian(p)
    trace = walk.propagate_walk(H, cfg.window_factor * cfg.n / cfg.b,
                                cfg.dtau_b / cfg.b)
    taus = [f * trace.tau_peak for f in cfg.tau_fractions]
    taus_sorted, probs = walk.occupation_heatmap(H, taus)
    header = ["N", "tau", "i", "j", "probability"]
    rows = []
    for t_idx, tau in enumerate(taus_sorted):
        for k, (i, j) in enumerate(H.basis.pairs):
            rows.append([cfg.n, tau * cfg.b, i, j, probs[t_idx, k]])
    log = [f"tau0_b={trace.tau_peak * cfg.b:.10f}"]
    for t_idx, tau in enumerate(taus_sorted):
        log.append(f"heatmap tau_b={tau * cfg.b:.6f} "
                   f"sum={float(np.sum(probs[t_idx])):.12f}")
    return header, rows, log


def run_exact_protocol(cfg: ExperimentConfig):
    p = ising.IsingParams(cfg.n, cfg.b, cfg.j)
    tau_b = _resolve_tau_b(cfg, cfg.n)
    r, rho, p_select = toy_protocol_state(p, tau_b / cfg.b)
    purity, fidelity = purity_and_fidelity(rho)
    _, min_eig, negativity = is_entangled_ppt(rho)
    header = ["N", "B", "J", "tau", "p_select", "abs_r", "purity", "fidelity",
              "negativity", "min_pt_eigenvalue"]
    rows = [[cfg.n, cfg.b, cfg.j, tau_b, p_select, abs(r), purity, fidelity,
             negativity, min_eig]]
    return header, rows, [f"abs_r={abs(r):.10f} p_select={p_select:.10f}"]


def run_inequality(cfg: ExperimentConfig):
    p = ising.IsingParams(cfg.n, cfg.b, cfg.j)
    if cfg.tau_b is not None:
        tau_bs = [cfg.tau_b]
    else:
        peak_b = _walk_peak(cfg.n, cfg).tau_peak * cfg.b
        top = 1.5 * peak_b
        tau_bs = list(np.arange(0.0, top + 1e-9, cfg.tau_b_step))
    hamiltonian = ising.build_hamiltonian(p)
    psi0 = ising.ground_state(p)
    u1 = LocalOperator((2,), ising.SIGMA_X)
    u2 = LocalOperator((p.N - 1,), ising.SIGMA_X)
    proj = ising.ground_projector(p.N)
    header = ["N", "B", "J", "tau", "lhs1", "lhs2", "rhs", "margin", "violated"]
    rows = []
    for tau_b in tau_bs:
        spec = ProtocolSpec(n_sites=p.N, hamiltonian=hamiltonian, u1=u1, u2=u2,
                            projector=proj, tau=tau_b / cfg.b, params=p)
        rep = evaluate_inequality(spec, psi0)
        rows.append([cfg.n, cfg.b, cfg.j, tau_b, rep.lhs_term_1, rep.lhs_term_2,
                     rep.rhs, rep.margin, rep.violated])
    n_violated = sum(1 for row in rows if row[-1])
    return header, rows, [f"violated at {n_violated}/{len(rows)} times"]


def run_tomography(cfg: ExperimentConfig):
    p = ising.IsingParams(cfg.n, cfg.b, cfg.j)
    tau_b = _resolve_tau_b(cfg, cfg.n)
    spec = toy_protocol_spec(p, tau_b / cfg.b)
    rho = tomography_from_expectations(spec, ising.ground_state(p))
    header = ["N", "B", "J", "tau"]
    for a in BASIS_LABELS:
        for b in BASIS_LABELS:
            header += [f"re_rho_{a}_{b}", f"im_rho_{a}_{b}"]
    row = [cfg.n, cfg.b, cfg.j, tau_b]
    for a in range(4):
        for b in range(4):
            row += [rho.entries[a, b].real, rho.entries[a, b].imag]
    return header, [row], []


def _crosscheck_rows(cfg: ExperimentConfig):
    if cfg.n > 8:
        raise ValueError("crosscheck caps N at 8 (joint-space oracle cost)")
    p = ising.IsingParams(cfg.n, cfg.b, cfg.j)
    tau_b = _resolve_tau_b(cfg, cfg.n)
    spec = toy_protocol_spec(p, tau_b / cfg.b)
    psi0 = ising.ground_state(p)
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tol

    checks = []

    wh = walk.build_walk_hamiltonian(p)
    src = StateVector.basis_state(wh.basis.size, 0, wh.basis.tag())
    dev = 0.0
    for t in rng.uniform(0.0, 2.0 / cfg.b, size=4):
        a = expm_apply(wh.matrix, src, float(t), method="chebyshev")
        bvec = expm_apply(wh.matrix, src, float(t), method="eig")
        dev = max(dev, float(np.max(np.abs(a.amplitudes - bvec.amplitudes))))
    checks.append(("expm_chebyshev_vs_eig", dev, tol))

    outcome = run_protocol(spec, psi0)
    joint_rho, joint_p = run_protocol_joint_oracle(spec, psi0)
    dev = float(np.max(np.abs(outcome.rho.entries - joint_rho)))
    checks.append(("branch_vs_joint_rho", dev, tol))
    checks.append(("branch_vs_joint_p_select",
                   abs(outcome.p_select - joint_p), tol))

    tomo = tomography_from_expectations(spec, psi0)
    checks.append(("tomography_vs_branch_rho",
                   float(np.max(np.abs(tomo.entries - outcome.rho.entries))),
                   tol))

    direct = direct_overlap(spec, psi0)
    checks.append(("dual_control_overlap_vs_direct",
                   abs(overlap_via_dual_control(spec, psi0) - direct), tol))
    p2, rest = toy_projector_factors(p.N)
    decomp = decompose_projected_unitary(p2, spec.u2, rest)
    checks.append(("single_control_overlap_vs_direct",
                   abs(overlap_via_single_control(spec, psi0, decomp) - direct),
                   tol))

    rep = evaluate_inequality(spec, psi0)
    minor, _ = sylvester_minor(outcome.rho)
    scaled = (rep.lhs_term_1 * rep.lhs_term_2 - rep.rhs) / (4.0 * outcome.p_select) ** 2
    checks.append(("minor_identity_vs_inequality", abs(minor - scaled), tol))

    taus, probs = walk.occupation_heatmap(wh, [0.0, 0.5 * tau_b / cfg.b,
                                               tau_b / cfg.b])
    checks.append(("heatmap_normalization",
                   float(np.max(np.abs(probs.sum(axis=1) - 1.0))), tol))

    # Spatial mirror of the chain: transfer (2,2) -> (N-1,N-1) must match
    # (N-1,N-1) -> (2,2) in magnitude at every sampled time.
    fwd = walk.propagate_walk(wh, tau_b / cfg.b, cfg.dtau_b / cfg.b)
    state = StateVector.basis_state(wh.basis.size,
                                    wh.basis.index_of(p.N - 1, p.N - 1),
                                    wh.basis.tag())
    tgt = wh.basis.index_of(2, 2)
    dtau = cfg.dtau_b / cfg.b
    dev = 0.0
    for k in range(1, fwd.tau_grid.size):
        state = expm_apply(wh.matrix, state, dtau)
        dev = max(dev, abs(abs(state.amplitudes[tgt]) - abs(fwd.r_values[k])))
    checks.append(("walk_reflection_symmetry", dev, tol))
    return checks


def run_crosscheck(cfg: ExperimentConfig):
    checks = _crosscheck_rows(cfg)
    header = ["check_name", "max_abs_deviation", "tolerance", "pass"]
    rows = [[name, dev, tol, dev < tol] for name, dev, tol in checks]
    log = [f"{name}: deviation={dev:.3e} ({'ok' if dev < tol else 'FAIL'})"
           for name, dev, tol in checks]
    return header, rows, log


_RUNNERS = {
    "walk-sweep": run_walk_sweep,
    "heatmap": run_heatmap,
    "exact-protocol": run_exact_protocol,
    "inequality": run_inequality,
    "tomography": run_tomography,
    "crosscheck": run_crosscheck,
}


def run_experiment(cfg: ExperimentConfig) -> str:
    """Execute one experiment and write its CSV; returns the output path."""
    header, rows, log = _RUNNERS[cfg.experiment](cfg)
    write_csv(cfg.out_path, cfg.experiment, header, rows)
    for line in log:
        print(line)
    print(f"wrote {cfg.out_path}")
    return cfg.out_path


def load_config_file(path: str) -> dict:
    """Flat key=value file; blank lines and # comments ignored."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


_INT_KEYS = {"n", "threads", "seed"}
_FLOAT_KEYS = {"b", "j", "tau", "window_factor", "dtau", "tau_step", "tol"}
_LIST_KEYS = {"n_list", "tau_fractions"}
_STR_KEYS = {"out"}
_KEY_TO_FIELD = {"tau": "tau_b", "dtau": "dtau_b", "tau_step": "tau_b_step"}


def _coerce(key: str, val: str):
    if key in _INT_KEYS:
        return int(val)
    if key in _FLOAT_KEYS:
        return float(val)
    if key in _LIST_KEYS:
        parts = [p for p in val.replace(",", " ").split() if p]
        return tuple(int(p) for p in parts) if key == "n_list" \
            else tuple(float(p) for p in parts)
    return val


def build_config(experiment: str, file_values: dict, cli_values: dict
                 ) -> ExperimentConfig:
    """Defaults, overridden by the config file, overridden by CLI flags."""
    merged = {}
    for key, raw in file_values.items():
        if key == "experiment":
            continue
        if key not in _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _STR_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        merged[_KEY_TO_FIELD.get(key, key)] = _coerce(key, raw)
    for key, val in cli_values.items():
        if val is not None:
            merged[_KEY_TO_FIELD.get(key, key)] = val
    return ExperimentConfig(experiment=experiment, **merged)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinwitness",
        description="Spin-chain entanglement protocol experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--out", help="output CSV path")
        sp.add_argument("-N", "--n", type=int, dest="n", help="chain length")
        sp.add_argument("--n-list", dest="n_list",
                        help="comma-separated chain lengths (walk-sweep)")
        sp.add_argument("--b", type=float, help="transverse field B")
        sp.add_argument("--j", type=float, help="coupling J")
        sp.add_argument("--tau", type=float, dest="tau",
                        help="evolution time tau*B (default: walk peak)")
        sp.add_argument("--window-factor", type=float, dest="window_factor",
                        help="peak search window, units of N/B")
        sp.add_argument("--dtau", type=float, dest="dtau",
                        help="time step dtau*B")
        sp.add_argument("--tau-fractions", dest="tau_fractions",
                        help="heatmap times as fractions of tau0")
        sp.add_argument("--tau-step", type=float, dest="tau_step",
                        help="inequality tau*B grid step")
        sp.add_argument("--threads", type=int, help="sweep worker threads")
        sp.add_argument("--seed", type=int, help="crosscheck RNG seed")
        sp.add_argument("--tol", type=float, help="crosscheck tolerance override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cli_values = {}
    for key in ("out", "n", "b", "j", "window_factor", "threads", "seed", "tol"):
        cli_values[key] = getattr(args, key, None)
    for key, dest in (("tau", "tau_b"), ("dtau", "dtau_b"),
                      ("tau_step", "tau_b_step")):
        cli_values[dest] = getattr(args, key, None)
    for key in ("n_list", "tau_fractions"):
        raw = getattr(args, key, None)
        cli_values[key] = None if raw is None else _coerce(key, raw)

    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = build_config(args.experiment, file_values, cli_values)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        run_experiment(cfg)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
