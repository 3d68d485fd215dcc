"""Batch rendering of spinwitness CSV files into static figures.

The harness is consumed strictly through its published CSV schemas; nothing
here imports the simulation package.  Four figure kinds:

    fig2a              1/|r_peak| vs N from a walk-sweep CSV, with the
                       least-squares line overlaid and annotated
    fig2b              tau_peak*B vs N from the same CSV, same treatment
    fig2c              one occupation heatmap panel per time from a heatmap
                       CSV, all panels sharing one linear color scale
    inequality-margin  inequality margin vs tau*B, violations highlighted

Fit parameters are recomputed here with plain OLS, the same arithmetic the
harness prints, so the annotations can be compared against its output
digit for digit (to the 4 decimals shown).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FIGURE_KINDS = ("fig2a", "fig2b", "fig2c", "inequality-margin")

# Columns each figure kind needs from its input CSV.
REQUIRED_COLUMNS = {
    "fig2a": ("N", "tau_peak", "abs_r_peak"),
    "fig2b": ("N", "tau_peak", "abs_r_peak"),
    "fig2c": ("N", "tau", "i", "j", "probability"),
    "inequality-margin": ("N", "tau", "margin", "violated"),
}


class SchemaError(ValueError):
    """Input CSV does not match the figure kind's expected schema."""


@dataclass(frozen=True)
class PlotSpec:
    input_csv: str
    figure_kind: str
    output_image: str

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.figure_kind!r}; "
                             f"expected one of {', '.join(FIGURE_KINDS)}")


@dataclass(frozen=True)
class FitLine:
    slope: float
    intercept: float
    r_squared: float


def ols_fit(x, y) -> FitLine:
    """Least squares y = slope*x + intercept; mirrors the harness output."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points for a fit")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("fit is degenerate: all x values coincide")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return FitLine(slope=slope, intercept=intercept, r_squared=r_squared)


def read_rows(path: str, kind: str):
    """Rows as dicts, after validating the header against the figure kind.

    Leading '#' comment lines are skipped.  A missing or incomplete header,
    or an empty body, is a SchemaError naming what is absent.
    """
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: no header row")
    reader = csv.DictReader(lines)
    missing = [c for c in REQUIRED_COLUMNS[kind]
               if c not in (reader.fieldnames or ())]
    if missing:
        raise SchemaError(
            f"{path}: missing column(s) {', '.join(missing)} required for {kind}")
    rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _render_scaling(rows, kind: str, out: str) -> dict:
    n = np.array([float(r["N"]) for r in rows])
    if kind == "fig2a":
        y = 1.0 / np.array([float(r["abs_r_peak"]) for r in rows])
        ylabel = r"$|r_{\mathrm{peak}}|^{-1}$"
    else:
        y = np.array([float(r["tau_peak"]) for r in rows])
        ylabel = r"$\tau_0 B$"
    fit = ols_fit(n, y)

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot(n, y, "o", color="tab:blue", zorder=3)
    grid = np.linspace(n.min(), n.max(), 50)
    ax.plot(grid, fit.slope * grid + fit.intercept, "-", color="tab:red",
            label=(f"slope = {fit.slope:.4f}\n"
                   f"intercept = {fit.intercept:.4f}\n"
                   f"$r^2$ = {fit.r_squared:.4f}"))
    ax.set_xlabel("N")
    ax.set_ylabel(ylabel)
    ax.legend(loc="upper left", fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return {"slope": fit.slope, "intercept": fit.intercept,
            "r_squared": fit.r_squared, "n_points": int(n.size)}


def _render_heatmap_panels(rows, out: str) -> dict:
    by_tau: dict = {}
    for r in rows:
        by_tau.setdefault(float(r["tau"]), []).append(r)
    taus = sorted(by_tau)
    vmax = max(float(r["probability"]) for r in rows)

    fig, axes = plt.subplots(1, len(taus), figsize=(3.0 * len(taus), 3.0),
                             squeeze=False)
    sums = []
    mesh = None
    for ax, tau in zip(axes[0], taus):
        entries = by_tau[tau]
        i_vals = [int(e["i"]) for e in entries]
        j_vals = [int(e["j"]) for e in entries]
        lo, hi = min(i_vals), max(j_vals)
        grid = np.full((hi - lo + 1, hi - lo + 1), np.nan)
        total = 0.0
        for e in entries:
            prob = float(e["probability"])
            grid[int(e["j"]) - lo, int(e["i"]) - lo] = prob
            total += prob
        sums.append(total)
        mesh = ax.imshow(grid, origin="lower", vmin=0.0, vmax=vmax,
                         extent=(lo - 0.5, hi + 0.5, lo - 0.5, hi + 0.5),
                         interpolation="nearest")
        ax.set_title(rf"$\tau B$ = {tau:g}", fontsize=9)
        ax.set_xlabel("i")
        ax.set_ylabel("j")
    fig.colorbar(mesh, ax=axes[0], label="probability", shrink=0.85)
    fig.savefig(out)
    plt.close(fig)

    for tau, total in zip(taus, sums):
        print(f"panel tau_b={tau:g} sum={total:.12f}")
    return {"taus": taus, "sums": sums, "vmax": vmax}


def _render_margin(rows, out: str) -> dict:
    taus = np.array([float(r["tau"]) for r in rows])
    margins = np.array([float(r["margin"]) for r in rows])
    violated = np.array([r["violated"] == "true" for r in rows])

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.plot(taus, margins, "-", color="tab:blue", lw=1.0)
    ax.plot(taus[~violated], margins[~violated], "o", color="tab:blue",
            mfc="white", label="not violated")
    if violated.any():
        ax.plot(taus[violated], margins[violated], "o", color="tab:red",
                label="violated")
    ax.set_xlabel(r"$\tau B$")
    ax.set_ylabel("inequality margin")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return {"n_points": int(taus.size), "n_violated": int(violated.sum()),
            "max_margin": float(margins.max())}


def render(spec: PlotSpec) -> dict:
    """Render one figure; returns the values annotated or printed, so
    callers (and tests) can compare them against the harness output."""
    rows = read_rows(spec.input_csv, spec.figure_kind)
    if spec.figure_kind in ("fig2a", "fig2b"):
        return _render_scaling(rows, spec.figure_kind, spec.output_image)
    if spec.figure_kind == "fig2c":
        return _render_heatmap_panels(rows, spec.output_image)
    return _render_margin(rows, spec.output_image)
