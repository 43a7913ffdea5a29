"""Figure rendering for the CLI report paths.

Every function returns a matplotlib Figure; ``save_figure`` writes it next to
the delimited artifact. Rendering is headless (Agg).
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .constants import HkTable
from .curves import CurveSet
from .engine import SimReport
from .schedule import ArrivalSchedule


def save_figure(fig, path: str) -> str:
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def figure_path(out_path: str) -> str:
    """artifact.csv / artifact.json -> artifact.png"""
    stem = out_path
    for ext in (".csv", ".json"):
        if stem.endswith(ext):
            stem = stem[: -len(ext)]
            break
    return stem + ".png"


def hk_figure(tab: HkTable) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(tab.z, tab.h, label="H(z)")
    ax.plot(tab.z, tab.k, label="K(z)")
    ax.axvline(tab.z1, color="gray", lw=0.8, ls="--", label=f"z1 = {tab.z1:.4f}")
    ax.plot([tab.z_cross], [np.interp(tab.z_cross, tab.z, tab.h)], "ko", ms=4)
    ax.set_xlabel("z")
    ax.set_ylabel("boundary curves")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("threshold-region boundaries and their single crossing")
    return fig


def curves_figure(cs: CurveSet, label: str = "") -> plt.Figure:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    finite = np.isfinite(cs.tau)
    ax1.plot(cs.grid[finite], cs.tau[finite], color="black")
    ax1.set_xlabel("t")
    ax1.set_ylabel("threshold tau(t)")
    if not finite.all():
        ax1.set_title("threshold curve (unbounded at t=0, clipped)", fontsize=9)
    else:
        ax1.set_title("threshold curve", fontsize=9)
    for i in range(cs.n):
        (line,) = ax2.plot(cs.grid, cs.p[i], lw=1.0, label=f"p_{i + 1}")
        ax2.plot(cs.grid, cs.q[i], lw=1.0, ls="--", color=line.get_color())
    ax2.set_xlabel("t")
    ax2.set_ylabel("p_i (solid), q_i (dashed)")
    ax2.legend(loc="upper left", fontsize=7, ncol=2)
    ax2.set_title("exceedance curves", fontsize=9)
    if label:
        fig.suptitle(label, fontsize=10)
    return fig


def schedule_figure(sched: ArrivalSchedule, label: str = "") -> plt.Figure:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    n = sched.F.shape[0]
    ax1.plot(sched.grid, sched.g, color="black", label="g(t)")
    ax1.set_xlabel("t")
    ax1.set_ylabel("g(t) = Pr[not stopped by t]")
    ax1.legend(loc="best", fontsize=8)
    ax1.set_title(f"auxiliary curve (gamma = {sched.gamma:.4f})", fontsize=9)
    for i in range(n):
        (line,) = ax2.plot(sched.grid, sched.F[i], lw=1.0, label=f"F_{i + 1}")
        if sched.atom[i] > 1e-12:
            # atom at t=1 drawn as a vertical jump to 1
            ax2.plot([1.0, 1.0], [sched.F[i, -1], 1.0], color=line.get_color(),
                     lw=2.5, alpha=0.6)
    ax2.set_xlabel("t")
    ax2.set_ylabel("arrival CDF F_i(t)")
    ax2.legend(loc="upper left", fontsize=7, ncol=2)
    ax2.set_title(f"arrival schedule, item_one = {sched.item_one + 1}", fontsize=9)
    if label:
        fig.suptitle(label, fontsize=10)
    return fig


def simulate_figure(report: SimReport, expected_stop=None) -> plt.Figure:
    """Survival probes with 3-sigma bars; for the main algorithm, the
    guarantee line gamma*t and (when supplied) the predicted stop CDF 1-g."""
    has_stop = report.stop_cdf is not None
    ncols = 2 if has_stop else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5 * ncols, 4), squeeze=False)
    ax = axes[0][0]
    t = np.array([row[0] for row in report.survival])
    ph = np.array([row[1] for row in report.survival])
    se = np.array([row[2] for row in report.survival])
    ax.errorbar(t, ph, yerr=3 * se, fmt="o", ms=3, capsize=2,
                label="Pr[ALG beats tau(t)]")
    if report.gamma is not None:
        ax.plot(t, report.gamma * t, color="gray", ls="--",
                label=f"{report.gamma:.4f} * t")
    ax.set_xlabel("t")
    ax.set_ylabel("survival probability")
    ax.legend(loc="upper left", fontsize=8)
    ax.set_title(f"{report.label}: {report.algorithm_tag}, "
                 f"ratio = {report.ratio:.4f} +/- {report.ratio_stderr:.4f}",
                 fontsize=9)
    if has_stop:
        ax2 = axes[0][1]
        ts = np.array([row[0] for row in report.stop_cdf])
        ps = np.array([row[1] for row in report.stop_cdf])
        ses = np.array([row[2] for row in report.stop_cdf])
        ax2.errorbar(ts, ps, yerr=3 * ses, fmt="o", ms=3, capsize=2,
                     label="empirical Pr[stop < t]")
        if expected_stop is not None:
            ax2.plot(ts, expected_stop, color="gray", ls="--", label="1 - g(t)")
        ax2.set_xlabel("t")
        ax2.set_ylabel("stopping CDF")
        ax2.legend(loc="upper left", fontsize=8)
    return fig


def verify_figure(reports) -> plt.Figure:
    """One bar per check: residual as a fraction of its tolerance, log scale."""
    names = [f"{r.check_name}:{r.instance_label}" if r.instance_label else r.check_name
             for r in reports]
    frac = np.array([max(r.max_residual / r.tolerance, 1e-12) for r in reports])
    colors = ["tab:green" if r.passed else "tab:red" for r in reports]
    height = max(3.0, 0.16 * len(reports))
    fig, ax = plt.subplots(figsize=(8, height))
    y = np.arange(len(reports))
    ax.barh(y, frac, color=colors)
    ax.axvline(1.0, color="black", lw=1.0)
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=5)
    ax.set_xscale("log")
    ax.set_xlabel("max residual / tolerance (1.0 = at the fence)")
    ax.invert_yaxis()
    npass = sum(r.passed for r in reports)
    ax.set_title(f"verification suite: {npass}/{len(reports)} checks pass", fontsize=10)
    return fig


def sweep_figure(rows: list[dict]) -> plt.Figure:
    """Grouped ratio bars per instance with 3-sigma whiskers and the three
    reference levels."""
    algs = [k for k in ("main_sel", "main_iid", "single_threshold", "uniform_arrival")
            if any(r.get(k) is not None for r in rows)]
    labels = [r["label"] for r in rows]
    x = np.arange(len(rows), dtype=float)
    width = 0.8 / max(len(algs), 1)
    fig, ax = plt.subplots(figsize=(max(7, 0.9 * len(rows)), 4.5))
    for j, alg in enumerate(algs):
        vals = np.array([r[alg]["ratio"] if r.get(alg) else np.nan for r in rows])
        errs = np.array([3 * r[alg]["ratio_stderr"] if r.get(alg) else 0.0 for r in rows])
        ax.bar(x + (j - (len(algs) - 1) / 2) * width, vals, width,
               yerr=errs, capsize=2, label=alg)
    for level, ls in ((0.745, ":"), (0.725, "--"), (0.5, "-.")):
        ax.axhline(level, color="gray", lw=0.8, ls=ls)
        ax.text(len(rows) - 0.4, level, f"{level}", fontsize=7, va="bottom", color="gray")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("E[ALG] / E[max]")
    ax.set_ylim(0.0, 1.05)
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title("competitive ratios per instance and algorithm", fontsize=10)
    return fig
