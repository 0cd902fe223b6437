"""Figure analogs of the simulator's result plots, rendered from CSV tables.

Every reference overlay is computed, not hard-coded: the work asymptote is
ln 2 (the degenerate-pair entropy in k_B T_c units) and the efficiency
asymptote is 1 - T_c/T_h read from the run manifest.  Rows with
engine_flag = false are drawn in a distinct style and carry the SVG group id
"non-engine" so they stay machine-identifiable in the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .data import SweepTable, carnot_efficiency, read_table  # noqa: E402

FIGURE_IDS = ["work-vs-r", "eta-vs-r", "power-vs-eta", "power-vs-r",
              "pmax-vs-sigma", "contour"]

# stable ids + no embedded dates: re-rendering the same CSV is byte-identical
matplotlib.rcParams["svg.hashsalt"] = "qstirling-figures"
SAVEFIG_KW = {"metadata": {"Date": None}}

NON_ENGINE_GID = "non-engine"


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    csv_paths: tuple[str, ...]
    title: str = ""
    overlays: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}; "
                             f"choose from {FIGURE_IDS}")
        if not self.csv_paths:
            raise ValueError("at least one input CSV is required")


def _split_engine(ax, x, y, flags, label):
    """Engine rows as a solid curve, non-engine rows marked and gid-tagged."""
    ax.plot(x[flags], y[flags], "o-", ms=3, label=label)
    if (~flags).any():
        pts = ax.plot(x[~flags], y[~flags], "x", color="0.55", ms=4,
                      label="no engine output")[0]
        pts.set_gid(NON_ENGINE_GID)


def _work_vs_r(ax, tables, overlays):
    for t in tables:
        _split_engine(ax, t.r, t.W_over_kTc, t.engine_flag,
                      f"sigma = {t.sigma[0]:g}")
    ln2 = math.log(2.0)   # quasistatic degenerate-pair limit, W -> kB dT ln 2
    ax.axhline(ln2, ls=":", color="tab:blue", label=r"$\ln 2$")
    ax.axhline(0.0, lw=0.6, color="0.8")
    ax.set_xscale("log")
    ax.set_xlabel("r (thermalization steps per quench)")
    ax.set_ylabel(r"$W / k_B T_c$")


def _eta_vs_r(ax, tables, overlays):
    for t in tables:
        _split_engine(ax, t.r, t.eta, t.engine_flag, f"sigma = {t.sigma[0]:g}")
    eta_c = overlays["carnot"]   # 1 - T_c/T_h from the run manifest
    ax.axhline(eta_c, ls=":", color="tab:red",
               label=f"Carnot = {eta_c:g}")
    ax.set_xscale("log")
    ax.set_xlabel("r (thermalization steps per quench)")
    ax.set_ylabel(r"efficiency $\eta$")
    ax.set_ylim(-1.0, 1.0)


def _annotate_peak(ax, x, y):
    i = int(y.argmax())
    ax.axvline(x[i], ls="--", lw=0.8, color="0.4")
    ax.axhline(y[i], ls="--", lw=0.8, color="0.4")
    ax.annotate(f"$P_{{max}}$ = {y[i]:.3g} aW", (x[i], y[i]),
                textcoords="offset points", xytext=(6, 6), fontsize=8)


def _power_vs_eta(ax, tables, overlays):
    for t in tables:
        _split_engine(ax, t.eta, t.P_attowatts, t.engine_flag,
                      f"sigma = {t.sigma[0]:g}")
        if t.engine_flag.any():
            _annotate_peak(ax, t.eta[t.engine_flag],
                           t.P_attowatts[t.engine_flag])
    ax.set_xlabel(r"efficiency $\eta$")
    ax.set_ylabel("P (aW)")


def _power_vs_r(ax, tables, overlays):
    for t in tables:
        _split_engine(ax, t.r, t.P_attowatts, t.engine_flag,
                      f"sigma = {t.sigma[0]:g}")
        if t.engine_flag.any():
            _annotate_peak(ax, t.r[t.engine_flag], t.P_attowatts[t.engine_flag])
    ax.set_xscale("log")
    ax.set_xlabel("r (thermalization steps per quench)")
    ax.set_ylabel("P (aW)")


def _pmax_vs_sigma(ax, tables, overlays):
    for t in tables:
        _split_engine(ax, t.sigma, t.P_attowatts, t.engine_flag, "$P_{max}$")
    ax.set_xlabel(r"$\sigma$ (quench-size divisor)")
    ax.set_ylabel(r"$P_{max}$ (aW)")


def _contour(ax, tables, overlays):
    import numpy as np

    t = tables[0]
    r_vals = np.unique(t.r)
    s_vals = np.unique(t.sigma)
    if len(t) != len(r_vals) * len(s_vals):
        raise ValueError(
            f"{t.path}: contour needs a full r x sigma grid "
            f"({len(r_vals)} x {len(s_vals)} != {len(t)} rows)")
    order = np.lexsort((t.sigma, t.r))
    P = t.P_attowatts[order].reshape(len(r_vals), len(s_vals))
    flag = t.engine_flag[order].reshape(len(r_vals), len(s_vals))
    masked = np.ma.masked_where(~flag, P)   # white regions: no engine output
    mesh = ax.pcolormesh(s_vals, r_vals, masked, shading="nearest",
                         cmap="viridis")
    mesh.set_gid(NON_ENGINE_GID + "-masked")
    ax.figure.colorbar(mesh, ax=ax, label="P (aW)")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\sigma$")
    ax.set_ylabel("r")


_RENDERERS = {
    "work-vs-r": _work_vs_r,
    "eta-vs-r": _eta_vs_r,
    "power-vs-eta": _power_vs_eta,
    "power-vs-r": _power_vs_r,
    "pmax-vs-sigma": _pmax_vs_sigma,
    "contour": _contour,
}


def render(spec: FigureSpec, out_path: str) -> None:
    """Render one figure to a vector image at ``out_path``."""
    tables: list[SweepTable] = [read_table(p) for p in spec.csv_paths]
    overlays = dict(spec.overlays)
    overlays.setdefault("carnot", carnot_efficiency(spec.csv_paths[0]))

    fig, ax = plt.subplots(figsize=(5.2, 3.6), constrained_layout=True)
    try:
        _RENDERERS[spec.figure_id](ax, tables, overlays)
        if spec.title:
            ax.set_title(spec.title)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=8)
        fig.savefig(out_path, **SAVEFIG_KW)
    finally:
        plt.close(fig)
