"""Monte Carlo engine, prophet benchmark, and baseline algorithms.

The main algorithm draws an independent arrival time t_i for every item from
the designed schedule and accepts the first item whose value clears the
threshold curve at its own arrival time.  Trials are vectorized in fixed-size
blocks, each block seeded by a counter-based stream, so a run is bit-identical
for any worker count.

Threshold comparisons in the default ("exact") mode use the transform
m(v) = 1 - prod_j cdf_j(v): since m is the exceedance probability of the
maximum, v > tau(t) holds iff m(v) < t up to events of probability zero, which
replaces per-sample root finding with two monotone evaluations.  "fast" mode
interpolates the tabulated threshold curve instead and is kept only for
runtime comparisons; acceptance-grade runs should not use it.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .curves import CurveSet, build_curveset, eval_tau
from .distributions import INF, Instance, quantile_eval, support_bounds
from .schedule import ArrivalSchedule, arrival_from_uniform, build_schedule
from .constants import get_constants

_BLOCK = 65536
PROBE_TIMES = tuple(np.round(np.arange(1, 20) * 0.05, 2))
ALGORITHM_TAGS = ("main", "single_threshold", "uniform_arrival")


class InfiniteProphetError(RuntimeError):
    """The benchmark E[max] diverges (e.g. Pareto shape <= 1)."""


# -- reports -------------------------------------------------------------------


@dataclass(frozen=True)
class SimReport:
    """Summary statistics of one Monte Carlo run.

    survival rows are (t, empirical Pr[accepted value > tau(t)], stderr);
    stop_cdf rows are (t, empirical Pr[stop before t], stderr) and are absent
    for the index-order baseline, which has no arrival clock.
    """

    label: str
    algorithm_tag: str
    trials: int
    seed: int
    gamma: float | None
    alg_mean: float
    alg_stderr: float
    opt_mean: float
    opt_stderr: float
    ratio: float
    ratio_stderr: float
    accept_rate: float
    survival: tuple[tuple[float, float, float], ...]
    stop_cdf: tuple[tuple[float, float, float], ...] | None = field(default=None)

    def as_dict(self) -> dict:
        out = {
            "label": self.label,
            "algorithm_tag": self.algorithm_tag,
            "trials": self.trials,
            "seed": self.seed,
            "gamma": self.gamma,
            "alg_mean": self.alg_mean,
            "alg_stderr": self.alg_stderr,
            "opt_mean": self.opt_mean,
            "opt_stderr": self.opt_stderr,
            "ratio": self.ratio,
            "ratio_stderr": self.ratio_stderr,
            "accept_rate": self.accept_rate,
            "survival": [list(row) for row in self.survival],
            "stop_cdf": None if self.stop_cdf is None else [list(r) for r in self.stop_cdf],
        }
        return out


def default_gamma(inst: Instance) -> float:
    """Auto rule: the i.i.d. constant on i.i.d. instances, else the
    order-selection constant."""
    c = get_constants()
    return c.gamma_iid if inst.is_iid else c.gamma_sel


# -- trial blocks ----------------------------------------------------------------


def max_exceedance(inst: Instance, v):
    """m(v) = Pr[max_j v_j > v] = 1 - prod_j cdf_j(v), vectorized."""
    v = np.asarray(v, dtype=float)
    prod = np.ones_like(v)
    for d in inst.items:
        prod *= np.asarray(d.cdf(v), dtype=float)
    return 1.0 - prod


def _draw_block(inst: Instance, seed: int, index: int, sched: ArrivalSchedule | None):
    """Values and arrival times for one block of trials.

    The stream is keyed by (seed, block index); the full block is always
    drawn so trial j of block b is the same no matter how many trials or
    workers a run uses. arrivals is None when no schedule is supplied
    (baselines that ignore the clock)."""
    rng = np.random.Generator(np.random.Philox(key=[seed, index]))
    n = inst.n
    u_val = rng.random((n, _BLOCK))
    u_arr = rng.random((n, _BLOCK))
    values = np.empty_like(u_val)
    for i, d in enumerate(inst.items):
        values[i] = d.quantile(u_val[i])
    if sched is None:
        return values, u_arr
    arrivals = np.empty_like(u_arr)
    for i in range(n):
        arrivals[i] = arrival_from_uniform(sched, i, u_arr[i])
    return values, arrivals


def _accept_main(inst, cs, sched, values, arrivals, mode):
    """Vectorized accept decision for the arrival-time algorithm.

    Returns (accepted value, accept time) per trial; time is NaN when no item
    is accepted.  Items at t=1 are unseen: item_one is taken unconditionally,
    everything else refused."""
    if mode == "exact":
        clears = max_exceedance(inst, values) < arrivals
    elif mode == "fast":
        thr = np.interp(arrivals, cs.grid, cs.tau)
        clears = values > thr
    else:
        raise ValueError(f"unknown threshold mode {mode!r}")
    interior = (arrivals < 1.0) & clears
    t_eff = np.where(interior, arrivals, np.inf)
    win = np.argmin(t_eff, axis=0)  # first index wins ties
    cols = np.arange(values.shape[1])
    t_win = t_eff[win, cols]
    has_interior = np.isfinite(t_win)
    one_at_end = arrivals[sched.item_one] >= 1.0
    accepted = has_interior | one_at_end
    value = np.where(
        has_interior,
        values[win, cols],
        np.where(one_at_end, values[sched.item_one], 0.0),
    )
    atime = np.where(has_interior, t_win, np.where(one_at_end, 1.0, np.nan))
    who = np.where(has_interior, win, np.where(one_at_end, sched.item_one, -1))
    return value, atime, accepted, who


def _accept_uniform(inst, cs, values, arrivals, mode):
    """Same threshold rule, arrival times uniform on [0,1], no atom."""
    if mode == "exact":
        clears = max_exceedance(inst, values) < arrivals
    else:
        thr = np.interp(arrivals, cs.grid, cs.tau)
        clears = values > thr
    t_eff = np.where(clears, arrivals, np.inf)
    win = np.argmin(t_eff, axis=0)
    cols = np.arange(values.shape[1])
    t_win = t_eff[win, cols]
    accepted = np.isfinite(t_win)
    value = np.where(accepted, values[win, cols], 0.0)
    atime = np.where(accepted, t_win, np.nan)
    who = np.where(accepted, win, -1)
    return value, atime, accepted, who


def _accept_single_threshold(values, threshold):
    """First item (index order) whose value exceeds the fixed threshold."""
    hit = values > threshold
    first = np.argmax(hit, axis=0)
    cols = np.arange(values.shape[1])
    accepted = hit.any(axis=0)
    value = np.where(accepted, values[first, cols], 0.0)
    who = np.where(accepted, first, -1)
    return value, None, accepted, who


@dataclass
class _Partials:
    count: int = 0
    s_a: float = 0.0
    s_a2: float = 0.0
    s_o: float = 0.0
    s_o2: float = 0.0
    s_ao: float = 0.0
    accepted: int = 0
    surv: np.ndarray = None  # type: ignore[assignment]
    stop: np.ndarray | None = None
    bihit: np.ndarray | None = None


def _run_blocks(inst, cs, sched, tag, trials, seed, mode, workers, threshold, probes,
                track_items=False):
    n_blocks = (trials + _BLOCK - 1) // _BLOCK
    probes_arr = np.asarray(probes, dtype=float)

    def one_block(b):
        use = _BLOCK if (b + 1) * _BLOCK <= trials else trials - b * _BLOCK
        values, arrivals = _draw_block(inst, seed, b, sched if tag == "main" else None)
        if tag == "main":
            value, atime, accepted, who = _accept_main(inst, cs, sched, values, arrivals, mode)
        elif tag == "uniform_arrival":
            value, atime, accepted, who = _accept_uniform(inst, cs, values, arrivals, mode)
        elif tag == "single_threshold":
            value, atime, accepted, who = _accept_single_threshold(values, threshold)
        else:
            raise ValueError(f"unknown algorithm tag {tag!r}")
        value = value[:use]
        accepted = accepted[:use]
        who = who[:use]
        atime = None if atime is None else atime[:use]
        omax = values[:, :use].max(axis=0)

        p = _Partials()
        p.count = use
        p.s_a = float(np.sum(value))
        p.s_a2 = float(np.sum(value * value))
        p.s_o = float(np.sum(omax))
        p.s_o2 = float(np.sum(omax * omax))
        p.s_ao = float(np.sum(value * omax))
        p.accepted = int(np.count_nonzero(accepted))
        # survival: accepted and (value clears tau(t), i.e. m(value) < t, or
        # the stop happened strictly before t)
        m_val = max_exceedance(inst, value)
        surv = np.empty(probes_arr.size, dtype=np.int64)
        for k, t in enumerate(probes_arr):
            win = m_val < t
            if atime is not None:
                win = win | (atime < t)
            surv[k] = int(np.count_nonzero(accepted & win))
        p.surv = surv
        if atime is not None:
            p.stop = np.array(
                [int(np.count_nonzero(accepted & (atime < t))) for t in probes_arr],
                dtype=np.int64,
            )
        if track_items and atime is not None:
            # B_i(t): stopped at item i no earlier than t with value above tau(t)
            bihit = np.zeros((inst.n, probes_arr.size), dtype=np.int64)
            for i in range(inst.n):
                sel = accepted & (who == i)
                for k, t in enumerate(probes_arr):
                    bihit[i, k] = int(np.count_nonzero(sel & (atime >= t) & (m_val < t)))
            p.bihit = bihit
        return b, p

    results: dict[int, _Partials] = {}
    if workers <= 1:
        for b in range(n_blocks):
            results[b] = one_block(b)[1]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for b, p in pool.map(one_block, range(n_blocks)):
                results[b] = p

    # merge in block order with exact summation: identical for any worker count
    ordered = [results[b] for b in range(n_blocks)]
    tot = _Partials()
    tot.count = sum(p.count for p in ordered)
    tot.s_a = math.fsum(p.s_a for p in ordered)
    tot.s_a2 = math.fsum(p.s_a2 for p in ordered)
    tot.s_o = math.fsum(p.s_o for p in ordered)
    tot.s_o2 = math.fsum(p.s_o2 for p in ordered)
    tot.s_ao = math.fsum(p.s_ao for p in ordered)
    tot.accepted = sum(p.accepted for p in ordered)
    tot.surv = np.sum([p.surv for p in ordered], axis=0)
    if ordered[0].stop is not None:
        tot.stop = np.sum([p.stop for p in ordered], axis=0)
    if ordered[0].bihit is not None:
        tot.bihit = np.sum([p.bihit for p in ordered], axis=0)
    return tot


def estimate(
    inst: Instance,
    algorithm_tag: str = "main",
    trials: int = 10**6,
    seed: int = 0,
    *,
    gamma: float | None = None,
    grid_n: int = 4096,
    mode: str = "exact",
    workers: int = 1,
    probes=PROBE_TIMES,
    cs: CurveSet | None = None,
    sched: ArrivalSchedule | None = None,
) -> SimReport:
    """Run `trials` independent trials of the tagged algorithm.

    The prophet benchmark is estimated from the same value draws (common
    random numbers), so the reported ratio is far tighter than the two
    stderrs suggest; ratio_stderr propagates the covariance."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if algorithm_tag not in ALGORITHM_TAGS:
        raise ValueError(f"unknown algorithm tag {algorithm_tag!r}")
    threshold = None
    if algorithm_tag == "single_threshold":
        threshold = eval_tau(inst, 0.5)
        gamma = None
    elif algorithm_tag == "uniform_arrival":
        gamma = None  # thresholds do not depend on it and there is no schedule
        if cs is None and mode == "fast":
            cs = build_curveset(inst, grid_n)
    else:
        if gamma is None:
            gamma = default_gamma(inst)
        if cs is None:
            cs = build_curveset(inst, grid_n)
        if sched is None:
            sched = build_schedule(cs, gamma)

    tot = _run_blocks(inst, cs, sched, algorithm_tag, trials, seed, mode, workers,
                      threshold, probes)
    return _summarize(tot, inst, algorithm_tag, seed, gamma, probes)


def _summarize(tot: _Partials, inst, algorithm_tag, seed, gamma, probes) -> SimReport:
    n = tot.count
    a_mean = tot.s_a / n
    o_mean = tot.s_o / n
    var_a = max(tot.s_a2 - n * a_mean * a_mean, 0.0) / max(n - 1, 1)
    var_o = max(tot.s_o2 - n * o_mean * o_mean, 0.0) / max(n - 1, 1)
    cov = (tot.s_ao - n * a_mean * o_mean) / max(n - 1, 1)
    a_se = math.sqrt(var_a / n)
    o_se = math.sqrt(var_o / n)
    ratio = a_mean / o_mean
    ratio_var = (var_a + ratio * ratio * var_o - 2.0 * ratio * cov) / (n * o_mean * o_mean)
    ratio_se = math.sqrt(max(ratio_var, 0.0))

    def _rows(counts):
        out = []
        for t, c in zip(probes, counts):
            ph = c / n
            out.append((float(t), ph, math.sqrt(ph * (1.0 - ph) / n)))
        return tuple(out)

    stop_rows = None if tot.stop is None else _rows(tot.stop)
    return SimReport(
        label=inst.label,
        algorithm_tag=algorithm_tag,
        trials=n,
        seed=seed,
        gamma=gamma,
        alg_mean=a_mean,
        alg_stderr=a_se,
        opt_mean=o_mean,
        opt_stderr=o_se,
        ratio=ratio,
        ratio_stderr=ratio_se,
        accept_rate=tot.accepted / n,
        survival=_rows(tot.surv),
        stop_cdf=stop_rows,
    )


def simulate_main_events(
    inst: Instance,
    trials: int = 10**6,
    seed: int = 0,
    *,
    gamma: float | None = None,
    grid_n: int = 4096,
    mode: str = "exact",
    workers: int = 1,
    probes=PROBE_TIMES,
    cs: CurveSet | None = None,
    sched: ArrivalSchedule | None = None,
):
    """Main-algorithm run that also counts per-item late-acceptance events.

    Returns (SimReport, counts) with counts[i, k] the number of trials where
    item i was accepted at time >= probe_k with value above tau(probe_k) --
    the frequency whose lower bound the per-item acceptance lemma states.
    item_one's unseen atom acceptance lands in its own row, consistent with
    how the proof folds the atom into that item's accounting."""
    if gamma is None:
        gamma = default_gamma(inst)
    if cs is None:
        cs = build_curveset(inst, grid_n)
    if sched is None:
        sched = build_schedule(cs, gamma)
    tot = _run_blocks(inst, cs, sched, "main", trials, seed, mode, workers,
                      None, probes, track_items=True)
    return _summarize(tot, inst, "main", seed, gamma, probes), tot.bihit.copy()


def single_threshold_baseline(inst: Instance, trials: int = 10**6, seed: int = 0,
                              **kw) -> SimReport:
    """Fixed threshold tau(1/2) (median of the max), items in index order."""
    return estimate(inst, "single_threshold", trials, seed, **kw)


def uniform_arrival_baseline(inst: Instance, trials: int = 10**6, seed: int = 0,
                             **kw) -> SimReport:
    """Same thresholds, arrival times uniform on [0,1] for every item."""
    return estimate(inst, "uniform_arrival", trials, seed, **kw)


# -- single-trial reference path -------------------------------------------------


def run_alg_trial(
    sched: ArrivalSchedule,
    cs: CurveSet,
    inst: Instance,
    rng: np.random.Generator,
    threshold_mode: str = "bisect",
):
    """One trial, processed item by item in arrival order.

    Reference implementation against which the vectorized path is tested;
    threshold_mode 'bisect' resolves tau(t_i) by root finding per item,
    'interp' uses the tabulated curve. Returns (accepted value, accept time
    or None)."""
    n = inst.n
    values = np.array([quantile_eval(d, rng.random()) for d in inst.items])
    arrivals = np.array([arrival_from_uniform(sched, i, rng.random()) for i in range(n)])
    order = sorted(range(n), key=lambda i: (arrivals[i], i))
    for i in order:
        t = float(arrivals[i])
        if t >= 1.0:
            if i == sched.item_one:
                return float(values[i]), 1.0
            continue  # unseen rejection
        if threshold_mode == "bisect":
            accept = values[i] > eval_tau(inst, t)
        elif threshold_mode == "interp":
            accept = values[i] > np.interp(t, cs.grid, cs.tau)
        else:
            raise ValueError(f"unknown threshold mode {threshold_mode!r}")
        if accept:
            return float(values[i]), t
    return 0.0, None


# -- prophet benchmark ------------------------------------------------------------


def _has_infinite_mean(inst: Instance) -> bool:
    return any(d.kind == "pareto" and d.shape <= 1.0 for d in inst.items)


def prophet_value(inst: Instance, method: str = "auto", tol: float = 1e-12,
                  trials: int = 10**6, seed: int = 0) -> float:
    """E[max_i v_i].

    auto: closed form for homogeneous uniform instances, else quadrature of
    the tail integral of the max. monte-carlo is a cross-check path."""
    if _has_infinite_mean(inst):
        raise InfiniteProphetError("infinite prophet value")
    if method == "auto":
        d0 = inst.items[0]
        if inst.is_iid and d0.kind == "uniform":
            n = inst.n
            return d0.lo + (d0.hi - d0.lo) * n / (n + 1.0)
        method = "quadrature"
    if method == "monte-carlo":
        rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
        best = 0.0
        todo = trials
        while todo > 0:
            b = min(todo, _BLOCK)
            u = rng.random((inst.n, b))
            vals = np.empty_like(u)
            for i, d in enumerate(inst.items):
                vals[i] = d.quantile(u[i])
            best += float(np.sum(vals.max(axis=0)))
            todo -= b
        return best / trials
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")

    def tail(v):
        return max_exceedance(inst, v)

    sups = [support_bounds(d)[1] for d in inst.items]
    finite_sups = [s for s in sups if s != INF]
    # integrand kinks live at support endpoints and interior cdf breakpoints
    breaks = set()
    for d in inst.items:
        lo, hi = support_bounds(d)
        breaks.add(float(lo))
        if hi != INF:
            breaks.add(float(hi))
        if d.kind == "piecewise_linear_cdf":
            breaks.update(float(v) for v, _ in d.points)
    if len(finite_sups) == len(sups):
        upper = max(finite_sups)
        pts = sorted(b for b in breaks if 0.0 < b < upper)
        val, _ = quad(tail, 0.0, upper, points=pts or None, limit=400,
                      epsabs=tol, epsrel=tol)
        return val
    bound = max([float(quantile_eval(d, 1.0 - 1e-10)) for d in inst.items
                 if support_bounds(d)[1] == INF] + finite_sups)
    pts = sorted(b for b in breaks if 0.0 < b < bound)
    head, _ = quad(tail, 0.0, bound, points=pts or None, limit=400,
                   epsabs=tol, epsrel=tol)
    tail_part, _ = quad(tail, bound, np.inf, limit=400, epsabs=tol, epsrel=tol)
    return head + tail_part


# -- backward induction and the order oracle --------------------------------------


def _gl_nodes(quad_points: int):
    x, w = np.polynomial.legendre.leggauss(quad_points)
    return x, w


def _expected_max_with(d, c: float, quad_points: int) -> float:
    """E[max(v, c)] for a single item against continuation value c >= 0."""
    lo, hi = support_bounds(d)
    x, w = _gl_nodes(quad_points)
    if hi != INF:
        if c >= hi:
            return c
        a = max(float(lo), c)
        # E = c + (lo - c)^+ + int_a^hi (1 - cdf)
        base = c + max(float(lo) - c, 0.0)
        mid = 0.5 * (a + float(hi))
        half = 0.5 * (float(hi) - a)
        vals = 1.0 - np.asarray(d.cdf(mid + half * x), dtype=float)
        return base + half * float(np.dot(w, vals))
    # unbounded support: quantile-transformed nodes on (0,1)
    u = 0.5 * (x + 1.0)
    q = np.asarray(d.quantile(u), dtype=float)
    return 0.5 * float(np.dot(w, np.maximum(q, c)))


def backward_induction(inst: Instance, order, quad_points: int = 512) -> float:
    """Optimal online value for a fixed inspection order (0-based indices)."""
    if sorted(order) != list(range(inst.n)):
        raise ValueError("order must be a permutation of the item indices")
    if _has_infinite_mean(inst):
        raise InfiniteProphetError("infinite prophet value")
    v = 0.0
    for i in reversed(list(order)):
        v = _expected_max_with(inst.items[i], v, quad_points)
    return v


def brute_force_order(inst: Instance, quad_points: int = 512):
    """Best inspection order and its backward-induction value.

    The continuation value of a tail depends only on the set of remaining
    items, so maximizing over all n! orders reduces to a subset recursion;
    n is capped because the recursion is still exponential."""
    if inst.n > 8:
        raise ValueError("brute-force order search capped at n = 8")
    if _has_infinite_mean(inst):
        raise InfiniteProphetError("infinite prophet value")
    n = inst.n
    best_val = {0: 0.0}
    best_pick = {}
    for mask in range(1, 1 << n):
        candidates = []
        for i in range(n):
            if mask & (1 << i):
                tail = best_val[mask & ~(1 << i)]
                candidates.append((_expected_max_with(inst.items[i], tail, quad_points), i))
        val, pick = max(candidates)
        best_val[mask] = val
        best_pick[mask] = pick
    order = []
    mask = (1 << n) - 1
    while mask:
        i = best_pick[mask]
        order.append(i)
        mask &= ~(1 << i)
    return tuple(order), best_val[(1 << n) - 1]
