"""Threshold and probability curves on the uniform time grid.

For an instance with items v_1..v_n the threshold curve tau(t) is defined by
Pr[max_i v_i > tau(t)] = t, i.e. prod_i F_i(tau(t)) = 1 - t. From it:

    p_i(t) = Pr[v_i > tau(t)]             (single-item exceedance)
    q_i(t) = Pr[max_{j != i} v_j > tau(t)] (everyone-else exceedance)

which tie together through prod_i (1 - p_i(t)) = 1 - t and
(1 - q_i(t)) (1 - p_i(t)) = 1 - t.

Everything is tabulated on t_k = k/N. tau is found by bisection on the value
axis against the product CDF; the grid builder runs the bisection to the
floating-point floor so that the product identity holds to ~1e-12 even for
near-atomic smoothed instances whose CDF slopes are ~1e4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import INF, Instance

_GRID_ITERS = 100  # enough halvings to reach the float floor from any bracket
_P_ONE_THRESH = 1.0 - 1e-12  # switch q_i to the product form near p_i = 1


class BisectionError(RuntimeError):
    """Threshold bisection failed to converge within the iteration cap."""


@dataclass(frozen=True, eq=False)
class CurveSet:
    """Tabulated tau/p/q curves on the uniform grid t_k = k/N.

    grid: (N+1,) times; tau: (N+1,) thresholds, tau[0] may be +inf;
    p, q: (n, N+1) probabilities. Items are indexed 0-based.
    """

    grid: np.ndarray
    tau: np.ndarray
    p: np.ndarray
    q: np.ndarray
    N: int

    @property
    def n(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True, eq=False)
class InverseCurve:
    """One item's curves reparametrized by x = q_i(t).

    x: strictly increasing image grid over [0, q_i(1)];
    q_inv[k] = sup{t on the grid : q_i(t) <= x[k]};
    p_tilde[k] = p_i(q_inv[k]); g_tilde optionally carries g(q_inv[k]).
    """

    item: int
    x: np.ndarray
    q_inv: np.ndarray
    p_tilde: np.ndarray
    g_tilde: np.ndarray | None = None

    @property
    def q_at_one(self) -> float:
        return float(self.x[-1])


def _max_ess_inf(inst: Instance) -> float:
    return max(d.support[0] for d in inst.items)


def _max_ess_sup(inst: Instance) -> float:
    return max(d.support[1] for d in inst.items)


def _prod_cdf(inst: Instance, v):
    out = np.ones_like(np.asarray(v, dtype=float))
    for d in inst.items:
        out *= d.cdf(v)
    return out


def _upper_bracket(inst: Instance, t):
    """A value V with prod_i F_i(V) >= 1 - t, from per-item quantiles at the
    equal-split level (1-t)^(1/n); grown geometrically as a float-edge guard."""
    t = np.asarray(t, dtype=float)
    level = (1.0 - t) ** (1.0 / inst.n)
    hi = np.full(t.shape, -INF)
    for d in inst.items:
        hi = np.maximum(hi, d.quantile(level))
    lo_floor = _max_ess_inf(inst)
    hi = np.maximum(hi, lo_floor + 1e-9)
    for _ in range(200):
        bad = _prod_cdf(inst, hi) < (1.0 - t)
        if not np.any(bad):
            return hi
        hi = np.where(bad, lo_floor + 2.0 * (hi - lo_floor) + 1.0, hi)
    raise BisectionError("could not bracket the threshold from above")


def eval_tau(inst: Instance, t: float, tol: float = 1e-12) -> float:
    """Threshold at a single time t in [0, 1].

    t=0 returns the max essential supremum (+inf sentinel when any support is
    unbounded). Bisection stops once the bracket is below ``tol`` relative on
    the value axis and the product residual is negligible, with a 200-iteration
    cap that raises instead of returning silently bad values.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"time {t!r} outside [0, 1]")
    if t == 0.0:
        return _max_ess_sup(inst)
    if t == 1.0:
        return _max_ess_inf(inst)
    lo = _max_ess_inf(inst)
    hi = float(_upper_bracket(inst, t))
    target = 1.0 - t
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # float floor: bracket no longer splits
            return mid if lo < mid < hi else hi
        resid = float(_prod_cdf(inst, mid)) - target
        if resid < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)) and abs(resid) <= 1e-12:
            return 0.5 * (lo + hi)
    raise BisectionError(f"threshold bisection did not converge at t={t!r}")


def tau_grid(inst: Instance, t: np.ndarray) -> np.ndarray:
    """Vectorized threshold bisection at interior times (all 0 < t <= 1).

    Runs a fixed number of halvings, which takes every point to the float
    floor; no silent early exit."""
    t = np.asarray(t, dtype=float)
    lo = np.full(t.shape, _max_ess_inf(inst))
    hi = _upper_bracket(inst, t)
    target = 1.0 - t
    for _ in range(_GRID_ITERS):
        mid = 0.5 * (lo + hi)
        below = _prod_cdf(inst, mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _enforce_monotone(arr: np.ndarray, axis: int, what: str, slack: float = 1e-10) -> np.ndarray:
    """Snap away last-ULP float wobble; real violations raise."""
    out = np.maximum.accumulate(arr, axis=axis)
    drift = float(np.max(out - arr)) if arr.size else 0.0
    if drift > slack:
        raise BisectionError(f"{what} not monotone: wobble {drift:.3e} exceeds {slack:.1e}")
    return out


def curves_at(inst: Instance, times) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact (tau, p, q) at arbitrary times, bypassing the uniform grid.

    Each threshold is resolved by its own bisection, so inequality checks at
    probe times carry no interpolation bias. Shapes: tau (K,), p and q (n, K).
    """
    times = np.asarray(times, dtype=float)
    if np.any((times < 0.0) | (times > 1.0)):
        raise ValueError("probe times must lie in [0, 1]")
    tau = np.array([eval_tau(inst, float(t)) for t in times])
    n = inst.n
    p = np.empty((n, times.size))
    for i, d in enumerate(inst.items):
        p[i] = np.where(times == 0.0, 0.0, 1.0 - np.asarray(d.cdf(tau), dtype=float))
    p = np.clip(p, 0.0, 1.0)
    q = np.empty_like(p)
    for i in range(n):
        others = np.concatenate([p[:i], p[i + 1:]], axis=0)
        q[i] = 1.0 - np.prod(1.0 - others, axis=0) if others.size else 0.0
    return tau, p, q


def build_curveset(inst: Instance, N: int = 4096) -> CurveSet:
    """Tabulate tau, p_i, q_i on t_k = k/N (N >= 16).

    Endpoints are exact: t=0 has p_i = q_i = 0 and tau = max ess_sup (+inf if
    unbounded); t=1 has tau = max ess_inf. q_i is the probability some other
    item clears the threshold, 1 - prod_{j != i}(1 - p_j); dividing the full
    product by (1 - p_i) cancels that factor's own error exactly, so the
    explicit leave-one-out product is only needed where p_i ~ 1.
    """
    if N < 16:
        raise ValueError("grid resolution N must be at least 16")
    n = inst.n
    t = np.arange(N + 1, dtype=float) / N
    tau = np.empty(N + 1)
    tau[0] = _max_ess_sup(inst)
    tau[1:] = tau_grid(inst, t[1:])
    tau[N] = _max_ess_inf(inst)
    # tau must not increase (float dust from independent bisections)
    tau[1:] = np.minimum.accumulate(tau[1:])

    p = np.empty((n, N + 1))
    for i, d in enumerate(inst.items):
        p[i, 1:] = 1.0 - np.asarray(d.cdf(tau[1:]), dtype=float)
    p[:, 0] = 0.0
    p = np.clip(p, 0.0, 1.0)
    p = _enforce_monotone(p, axis=1, what="p_i(t)")

    total = np.prod(1.0 - p, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 1.0 - total[None, :] / (1.0 - p)
    hit = p >= _P_ONE_THRESH
    if np.any(hit):
        for i, k in zip(*np.nonzero(hit)):
            others = np.concatenate([1.0 - p[:i, k], 1.0 - p[i + 1 :, k]])
            q[i, k] = 1.0 - float(np.prod(others))
    q[:, 0] = 0.0
    q = np.clip(q, 0.0, 1.0)
    q = _enforce_monotone(q, axis=1, what="q_i(t)")
    return CurveSet(grid=t, tau=tau, p=p, q=q, N=N)


def build_inverse_curve(cs: CurveSet, i: int, g: np.ndarray | None = None) -> InverseCurve:
    """Monotone rearrangement of (q_i(t_k), t_k) onto the image grid.

    Where q_i is flat, only the last (sup) grid time is kept, which realizes
    q_inv(x) = sup{t : q_i(t) <= x}. ``g`` optionally tabulates the auxiliary
    curve alongside (same grid as cs)."""
    if not 0 <= i < cs.n:
        raise ValueError(f"item index {i} out of range")
    x_full = cs.q[i]
    keep = np.concatenate([x_full[1:] > x_full[:-1], [True]])  # last of each flat run
    x = x_full[keep]
    q_inv = cs.grid[keep]
    p_tilde = cs.p[i][keep]
    g_tilde = g[keep] if g is not None else None
    return InverseCurve(item=i, x=x, q_inv=q_inv, p_tilde=p_tilde, g_tilde=g_tilde)


def eq1_residual(cs: CurveSet) -> float:
    """max_k | prod_i (1 - p_i(t_k)) - (1 - t_k) |"""
    lhs = np.prod(1.0 - cs.p, axis=0)
    return float(np.max(np.abs(lhs - (1.0 - cs.grid))))


def eq2_residual(cs: CurveSet) -> float:
    """max_{i,k} | (1 - q_i)(1 - p_i) - (1 - t_k) |"""
    lhs = (1.0 - cs.q) * (1.0 - cs.p)
    return float(np.max(np.abs(lhs - (1.0 - cs.grid)[None, :])))


def eq3_window_residual(cs: CurveSet) -> float:
    """Worst grid-window residual of the summed derivative identity.

    sum_i dp_i * (1 - q_i at the cell midpoint) over [a, b] should equal
    b - a; midpoints are endpoint averages. The worst window residual equals
    max-minus-min of the prefix discrepancies."""
    dp = cs.p[:, 1:] - cs.p[:, :-1]
    q_mid = 0.5 * (cs.q[:, 1:] + cs.q[:, :-1])
    cell = np.sum(dp * (1.0 - q_mid), axis=0)
    prefix = np.concatenate([[0.0], np.cumsum(cell)]) - cs.grid
    return float(np.max(prefix) - np.min(prefix))


def p_tilde_identity_residual(inv: InverseCurve) -> float:
    """max over image points x < 1 of | p_tilde - (q_inv - x)/(1 - x) |

    (1 - x)(1 - p_tilde(x)) = 1 - q_inv(x), rearranged; the x = 1 endpoint
    is excluded because the quotient degenerates there."""
    mask = inv.x < 1.0
    if not np.any(mask):
        return 0.0
    x = inv.x[mask]
    rhs = (inv.q_inv[mask] - x) / (1.0 - x)
    return float(np.max(np.abs(inv.p_tilde[mask] - rhs)))
