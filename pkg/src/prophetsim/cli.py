"""Command-line entry point.

Sub-commands: constants, curves dump, schedule dump, simulate, verify all,
oracle, sweep. Every report path with --out writes the delimited artifact
(UTF-8 JSON or RFC-4180 CSV) and, unless --no-figures, a .png next to it.
Exit codes: 0 success, 1 verification failure, 2 usage/parse error (nothing
written on exit 2).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .constants import get_constants, hk_curves
from .corpus import corpus_path, CORPUS_LABELS
from .curves import BisectionError, build_curveset
from .distributions import Instance, InstanceError, load_instance
from .engine import (
    InfiniteProphetError,
    backward_induction,
    brute_force_order,
    default_gamma,
    estimate,
    prophet_value,
    simulate_main_events,
)
from .schedule import ScheduleValidityError, build_schedule, g_values, write_schedule_csv
from .verify import DEFAULT_SUITE_SEED, run_all
from . import plots


class UsageError(Exception):
    """Invalid flags, missing or malformed inputs: exit 2, no artifacts."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    instance_path: str | None
    gamma_mode: str  # "auto" or "explicit"
    gamma_value: float | None
    grid_n: int
    trials: int
    seed: int
    output_path: str | None
    format: str  # "json" or "csv"


def _positive_power_of_two(n: int) -> bool:
    return n >= 16 and (n & (n - 1)) == 0


def _parse_gamma(text: str):
    if text == "auto":
        return "auto", None
    try:
        v = float(text)
    except ValueError:
        raise UsageError(f"--gamma must be 'auto' or a number, got {text!r}")
    if not 0.0 < v < 1.0:
        raise UsageError(f"explicit gamma must lie in (0,1), got {v}")
    return "explicit", v


def _config(ns, command: str, fmt: str) -> RunConfig:
    grid_n = getattr(ns, "grid_n", 4096)
    if not _positive_power_of_two(grid_n):
        raise UsageError(f"--grid-n must be a power of two >= 16, got {grid_n}")
    trials = getattr(ns, "trials", 1)
    if trials < 1:
        raise UsageError(f"--trials must be >= 1, got {trials}")
    mode, value = _parse_gamma(getattr(ns, "gamma", "auto"))
    return RunConfig(
        command=command,
        instance_path=getattr(ns, "instance", None),
        gamma_mode=mode,
        gamma_value=value,
        grid_n=grid_n,
        trials=trials,
        seed=getattr(ns, "seed", 0),
        output_path=getattr(ns, "out", None),
        format=fmt,
    )


def _load(cfg: RunConfig, smooth) -> Instance:
    if cfg.instance_path is None:
        raise UsageError("--instance is required")
    if not os.path.exists(cfg.instance_path):
        raise UsageError(f"no such instance file: {cfg.instance_path}")
    try:
        return load_instance(cfg.instance_path, smooth=smooth)
    except (InstanceError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed instance {cfg.instance_path}: {exc}")


def _resolve_gamma(cfg: RunConfig, inst: Instance) -> float:
    if cfg.gamma_mode == "explicit":
        return cfg.gamma_value
    return default_gamma(inst)


def _emit_json(doc: dict, cfg: RunConfig) -> None:
    text = json.dumps(doc, indent=2)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {cfg.output_path}")
    else:
        print(text)


def _emit_rows(header, rows, cfg: RunConfig) -> None:
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        print(f"wrote {cfg.output_path}")
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)


def _maybe_figure(ns, cfg: RunConfig, fig) -> None:
    if fig is None:
        return
    if cfg.output_path and not ns.no_figures:
        print(f"wrote {plots.save_figure(fig, plots.figure_path(cfg.output_path))}")
    else:
        import matplotlib.pyplot as plt

        plt.close(fig)


# -- sub-commands -------------------------------------------------------------------


def _cmd_constants(ns) -> int:
    cfg = _config(ns, "constants", "json")
    c = get_constants()
    doc = c.as_dict()
    fig = None
    if ns.hk:
        tab = hk_curves(c.gamma_sel, c.alpha, ns.hk)
        rows = [(f"{z:.17g}", f"{h:.17g}", f"{k:.17g}")
                for z, h, k in zip(tab.z, tab.h, tab.k)]
        hk_cfg = cfg
        if cfg.output_path:
            stem = plots.figure_path(cfg.output_path)[:-4]
            hk_cfg = RunConfig(**{**cfg.__dict__, "output_path": stem + "_hk.csv"})
        _emit_rows(["z", "H", "K"], rows, hk_cfg)
        doc["z_cross"] = tab.z_cross
        doc["hk_gap_at_z1"] = tab.gap_at_z1
        fig = plots.hk_figure(tab)
    _emit_json(doc, cfg)
    _maybe_figure(ns, cfg, fig)
    return 0


def _cmd_curves(ns) -> int:
    cfg = _config(ns, "curves", "csv")
    inst = _load(cfg, ns.smooth)
    cs = build_curveset(inst, cfg.grid_n)
    header = (["t", "tau"] + [f"p_{i + 1}" for i in range(cs.n)]
              + [f"q_{i + 1}" for i in range(cs.n)])
    rows = []
    for k in range(cs.grid.size):
        rows.append([f"{cs.grid[k]:.17g}", f"{cs.tau[k]:.17g}"]
                    + [f"{cs.p[i, k]:.17g}" for i in range(cs.n)]
                    + [f"{cs.q[i, k]:.17g}" for i in range(cs.n)])
    _emit_rows(header, rows, cfg)
    _maybe_figure(ns, cfg, plots.curves_figure(cs, label=inst.label))
    return 0


def _cmd_schedule(ns) -> int:
    cfg = _config(ns, "schedule", "csv")
    inst = _load(cfg, ns.smooth)
    cs = build_curveset(inst, cfg.grid_n)
    sched = build_schedule(cs, _resolve_gamma(cfg, inst))
    if cfg.output_path:
        print(f"wrote {write_schedule_csv(sched, cfg.output_path)}")
    else:
        # stdout path: rows only, meta printed as one JSON line up front
        print(json.dumps({"gamma": sched.gamma, "item_one": sched.item_one + 1,
                          "atom": sched.atom.tolist()}))
        w = csv.writer(sys.stdout)
        n = sched.F.shape[0]
        w.writerow(["t", "g"] + [f"f_{i + 1}" for i in range(n)]
                   + [f"F_{i + 1}" for i in range(n)])
        for k in range(sched.grid.size):
            w.writerow([f"{sched.grid[k]:.17g}", f"{sched.g[k]:.17g}"]
                       + [f"{sched.f[i, k]:.17g}" for i in range(n)]
                       + [f"{sched.F[i, k]:.17g}" for i in range(n)])
    _maybe_figure(ns, cfg, plots.schedule_figure(sched, label=inst.label))
    return 0


def _cmd_simulate(ns) -> int:
    cfg = _config(ns, "simulate", "json")
    inst = _load(cfg, ns.smooth)
    gamma = _resolve_gamma(cfg, inst) if ns.alg == "main" else None
    try:
        if ns.alg == "main":
            report = estimate(inst, "main", cfg.trials, cfg.seed, gamma=gamma,
                              grid_n=cfg.grid_n, mode=ns.mode, workers=ns.workers)
        else:
            report = estimate(inst, ns.alg, cfg.trials, cfg.seed,
                              grid_n=cfg.grid_n, mode=ns.mode, workers=ns.workers)
    except InfiniteProphetError as exc:
        raise UsageError(str(exc))
    _emit_json(report.as_dict(), cfg)
    expected_stop = None
    if ns.alg == "main" and report.stop_cdf is not None:
        cs = build_curveset(inst, cfg.grid_n)
        probes = np.array([row[0] for row in report.stop_cdf])
        g = np.interp(probes, cs.grid, g_values(cs, report.gamma))
        expected_stop = 1.0 - g
    _maybe_figure(ns, cfg, plots.simulate_figure(report, expected_stop))
    return 0


def _instance_dir_paths(ns) -> list[str]:
    if ns.instance_dir is None:
        return [corpus_path(lbl) for lbl in CORPUS_LABELS]
    if not os.path.isdir(ns.instance_dir):
        raise UsageError(f"no such directory: {ns.instance_dir}")
    paths = sorted(
        os.path.join(ns.instance_dir, f)
        for f in os.listdir(ns.instance_dir)
        if f.endswith(".json") and not f.endswith("_meta.json")
    )
    if not paths:
        raise UsageError(f"no instance files in {ns.instance_dir}")
    return paths


def _cmd_verify(ns) -> int:
    cfg = _config(ns, "verify", "json")
    insts = []
    for p in _instance_dir_paths(ns):
        try:
            insts.append(load_instance(p))
        except (InstanceError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"malformed instance {p}: {exc}")
    insts = tuple(insts)
    reports = run_all(trials=cfg.trials, seed=cfg.seed, grid_n=cfg.grid_n,
                      workers=ns.workers, instances=insts)
    npass = sum(r.passed for r in reports)
    for r in reports:
        mark = "PASS" if r.passed else "FAIL"
        where = f" [{r.instance_label}]" if r.instance_label else ""
        print(f"{mark} {r.check_name}{where}: residual {r.max_residual:.3g} "
              f"(tolerance {r.tolerance:g})")
    print(f"{npass}/{len(reports)} checks pass")
    if cfg.output_path:
        doc = {"trials": cfg.trials, "seed": cfg.seed, "grid_n": cfg.grid_n,
               "passed": npass == len(reports),
               "reports": [r.as_dict() for r in reports]}
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"wrote {cfg.output_path}")
        stem = plots.figure_path(cfg.output_path)[:-4]
        rows = []
        for r in reports:
            for d in r.details:
                rows.append([r.check_name, r.instance_label, d.get("part", ""),
                             f"{d.get('normalized_residual', 0.0):.6g}",
                             f"{r.tolerance:g}", str(r.passed)])
        worst_cfg = RunConfig(**{**cfg.__dict__, "output_path": stem + "_worst.csv"})
        _emit_rows(["check_name", "instance_label", "part",
                    "normalized_residual", "tolerance", "passed"], rows, worst_cfg)
        _maybe_figure(ns, cfg, plots.verify_figure(reports))
    return 0 if npass == len(reports) else 1


def _cmd_oracle(ns) -> int:
    cfg = _config(ns, "oracle", "json")
    inst = _load(cfg, ns.smooth)
    if inst.n > 8:
        raise UsageError("brute-force order search capped at n = 8")
    try:
        order, value = brute_force_order(inst, quad_points=ns.quad_points)
        opt = prophet_value(inst)
        identity = backward_induction(inst, tuple(range(inst.n)), ns.quad_points)
        reverse = backward_induction(inst, tuple(range(inst.n - 1, -1, -1)),
                                     ns.quad_points)
    except InfiniteProphetError as exc:
        raise UsageError(str(exc))
    doc = {
        "label": inst.label,
        "n": inst.n,
        "best_order": [i + 1 for i in order],
        "best_value": value,
        "identity_order_value": identity,
        "reverse_order_value": reverse,
        "prophet_value": opt,
        "best_ratio": value / opt,
        "quad_points": ns.quad_points,
    }
    _emit_json(doc, cfg)
    if cfg.output_path and not ns.no_figures:
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 3))
        names = ["identity", "reverse", "best order", "prophet"]
        vals = [identity, reverse, value, opt]
        ax.barh(names, vals, color=["tab:blue"] * 3 + ["tab:gray"])
        ax.set_xlabel("expected value")
        ax.set_title(f"{inst.label}: order oracle", fontsize=9)
        print(f"wrote {plots.save_figure(fig, plots.figure_path(cfg.output_path))}")
    return 0


def _cmd_sweep(ns) -> int:
    cfg = _config(ns, "sweep", "csv")
    c = get_constants()
    paths = _instance_dir_paths(ns)
    rows_csv, rows_fig = [], []
    for p in paths:
        try:
            inst = load_instance(p)
        except (InstanceError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"malformed instance {p}: {exc}")
        cell = {"label": inst.label}
        runs = {"main_sel": ("main", c.gamma_sel)}
        if inst.is_iid:
            runs["main_iid"] = ("main", c.gamma_iid)
        runs["single_threshold"] = ("single_threshold", None)
        runs["uniform_arrival"] = ("uniform_arrival", None)
        for key, (alg, gamma) in runs.items():
            rep = estimate(inst, alg, cfg.trials, cfg.seed, gamma=gamma,
                           grid_n=cfg.grid_n, workers=ns.workers)
            cell[key] = {"ratio": rep.ratio, "ratio_stderr": rep.ratio_stderr}
        oracle_ratio = ""
        if inst.n <= 8:
            _, best = brute_force_order(inst)
            cell["oracle"] = best / prophet_value(inst)
            oracle_ratio = f"{cell['oracle']:.6f}"
        rows_fig.append(cell)
        out_row = [inst.label, str(inst.n)]
        for key in ("main_sel", "main_iid", "single_threshold", "uniform_arrival"):
            if cell.get(key):
                out_row += [f"{cell[key]['ratio']:.6f}",
                            f"{cell[key]['ratio_stderr']:.2e}"]
            else:
                out_row += ["", ""]
        out_row.append(oracle_ratio)
        rows_csv.append(out_row)
        print(f"swept {inst.label}")
    header = ["label", "n",
              "main_sel_ratio", "main_sel_stderr",
              "main_iid_ratio", "main_iid_stderr",
              "single_threshold_ratio", "single_threshold_stderr",
              "uniform_arrival_ratio", "uniform_arrival_stderr",
              "oracle_ratio"]
    _emit_rows(header, rows_csv, cfg)
    _maybe_figure(ns, cfg, plots.sweep_figure(rows_fig))
    return 0


# -- parser ------------------------------------------------------------------------


def _add_common(p, *, instance=True, grid=True, sim=False, smooth=True):
    if instance:
        p.add_argument("--instance", required=False, help="instance JSON file")
    if smooth:
        p.add_argument("--smooth", type=float, default=None, metavar="EPS",
                       help="smooth discrete atoms into uniform slivers of width EPS")
    if grid:
        p.add_argument("--grid-n", type=int, default=4096,
                       help="curve grid resolution (power of two >= 16)")
    if sim:
        p.add_argument("--trials", type=int, default=10**5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None, help="artifact path (prints to stdout if omitted)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip the .png rendered next to --out artifacts")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="prophetsim",
        description="threshold policies over designed arrival times: curves, "
                    "schedules, simulation, verification",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="solved constants as JSON")
    p.add_argument("--hk", type=int, default=0, metavar="M",
                   help="also emit the M-point boundary-curve CSV")
    _add_common(p, instance=False, grid=False, smooth=False)

    p = sub.add_parser("curves", help="threshold and exceedance curves")
    p.add_argument("action", choices=["dump"])
    _add_common(p)

    p = sub.add_parser("schedule", help="arrival-time schedule")
    p.add_argument("action", choices=["dump"])
    p.add_argument("--gamma", default="auto",
                   help="'auto' (i.i.d.-aware) or explicit value in (0,1)")
    _add_common(p)

    p = sub.add_parser("simulate", help="Monte Carlo run of one algorithm")
    p.add_argument("--alg", choices=["main", "single_threshold", "uniform_arrival"],
                   default="main")
    p.add_argument("--gamma", default="auto")
    p.add_argument("--mode", choices=["exact", "fast"], default="exact",
                   help="per-sample accept test: exact or tau-grid interpolation")
    _add_common(p, sim=True)

    p = sub.add_parser("verify", help="full verification suite")
    p.add_argument("action", choices=["all"])
    p.add_argument("--instance-dir", default=None,
                   help="directory of instance JSON files (default: bundled corpus)")
    p.add_argument("--grid-n", type=int, default=4096)
    p.add_argument("--trials", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=DEFAULT_SUITE_SEED)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("oracle", help="brute-force best arrival order (n <= 8)")
    p.add_argument("--quad-points", type=int, default=512)
    _add_common(p)

    p = sub.add_parser("sweep", help="ratio table: instances x algorithms")
    p.add_argument("--instance-dir", default=None)
    p.add_argument("--gamma", default="auto")
    _add_common(p, instance=False, sim=True)

    return ap


_HANDLERS = {
    "constants": _cmd_constants,
    "curves": _cmd_curves,
    "schedule": _cmd_schedule,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "oracle": _cmd_oracle,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return _HANDLERS[ns.command](ns)
    except (UsageError, ScheduleValidityError, BisectionError) as exc:
        # infeasible gamma and pathological curve construction are input
        # problems, same exit as malformed instances
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
