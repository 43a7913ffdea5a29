"""Competitive-ratio constants solved from their defining equations.

Three constants matter downstream:

- gamma_iid (~0.745): unique root of  int_0^1 dy / (y(1-ln y) + 1/G - 1) = 1.
  The integrand is continuous on [0,1] (limit G/(1-G) at y=0, value G at y=1)
  and strictly increasing in G, so bisection on [0.6, 0.9] is safe.
- alpha (~0.211): unique root of the strictly decreasing auxiliary function
  Y(z) = int_z^1 (ln z + 1) / ((ln z + 1)(-x ln x + x) - z) dx + 1/ln z.
  At z = e^{-1} the integrand vanishes identically and Y = -1; the denominator
  never vanishes on the integration range, so no principal values are needed.
- gamma_sel (~0.725): closed form (ln a + 1)/(ln a + 1 - a) at a = alpha.

The pair of curves
    H(z) = G(-(1-z)ln(1-z)) / (G(-(1-z)ln(1-z) - z) + 1)
    K(z) = G(1-z) / (1 - G z)
crosses exactly once on (0,1), at z1 = 1 - alpha, with H < K below and
H > K above; ``hk_curves`` tabulates both and verifies that structure.

Integrals use adaptive Gauss-Kronrod quadrature (scipy QUADPACK) at abs
tolerance 1e-13; root-finding is plain bisection to 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

_QUAD_KW = dict(epsabs=1e-13, epsrel=1e-13, limit=400)


@dataclass(frozen=True)
class Constants:
    gamma_iid: float
    alpha: float
    gamma_sel: float
    z1: float
    residual_gamma_iid: float  # defining-equation residual at the returned root
    residual_alpha: float

    def as_dict(self) -> dict:
        return {
            "gamma_iid": self.gamma_iid,
            "alpha": self.alpha,
            "gamma_sel": self.gamma_sel,
            "z1": self.z1,
            "residual_gamma_iid": self.residual_gamma_iid,
            "residual_alpha": self.residual_alpha,
        }


def _iid_gap(gamma: float) -> float:
    def integrand(y: float) -> float:
        return 1.0 / (y * (1.0 - math.log(y)) + 1.0 / gamma - 1.0)

    val, _ = quad(integrand, 0.0, 1.0, **_QUAD_KW)
    return val - 1.0


def _bisect(fn, lo: float, hi: float, tol: float) -> float:
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise ValueError(f"root not bracketed on [{lo}, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or not lo < mid < hi:
            return mid
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_gamma_iid(tol: float = 1e-12) -> float:
    """Root of the i.i.d. defining integral equation, by bisection."""
    return _bisect(_iid_gap, 0.6, 0.9, tol)


def y_function(z: float) -> float:
    """The strictly decreasing auxiliary function whose root is alpha.

    Defined for z in (0, 1). The integrand's numerator (ln z + 1) vanishes at
    z = e^{-1} while the denominator tends to -z != 0, so the function passes
    through -1 there without any singularity.
    """
    if not 0.0 < z < 1.0:
        raise ValueError(f"z={z!r} outside (0, 1)")
    lz1 = math.log(z) + 1.0

    def integrand(x: float) -> float:
        return lz1 / (lz1 * (-x * math.log(x) + x) - z)

    val, _ = quad(integrand, z, 1.0, **_QUAD_KW)
    return val + 1.0 / math.log(z)


def gamma_sel_from_alpha(alpha: float) -> float:
    la = math.log(alpha) + 1.0
    return la / (la - alpha)


def solve_alpha(tol: float = 1e-12) -> tuple[float, float]:
    """(alpha, gamma_sel): root of y_function and the closed-form ratio."""
    alpha = _bisect(y_function, 0.05, 0.9, tol)
    return alpha, gamma_sel_from_alpha(alpha)


@lru_cache(maxsize=1)
def get_constants() -> Constants:
    """Solve all constants once per process and memoize."""
    gamma_iid = solve_gamma_iid()
    alpha, gamma_sel = solve_alpha()
    return Constants(
        gamma_iid=gamma_iid,
        alpha=alpha,
        gamma_sel=gamma_sel,
        z1=1.0 - alpha,
        residual_gamma_iid=_iid_gap(gamma_iid),
        residual_alpha=y_function(alpha),
    )


def h_function(z, gamma: float):
    """Boundary functional H(z) on [0, 1); elementwise."""
    z = np.asarray(z, dtype=float)
    with np.errstate(invalid="ignore"):
        core = np.where(z < 1.0, -(1.0 - z) * np.log1p(-z), 0.0)
    out = gamma * core / (gamma * (core - z) + 1.0)
    return out if out.ndim else float(out)


def k_function(z, gamma: float):
    """Comparison curve K(z) = gamma (1-z) / (1 - gamma z); elementwise."""
    z = np.asarray(z, dtype=float)
    out = gamma * (1.0 - z) / (1.0 - gamma * z)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class HkTable:
    z: np.ndarray
    h: np.ndarray
    k: np.ndarray
    z1: float
    z_cross: float
    gap_at_z1: float
    crossing_ok: bool


def hk_curves(gamma: float, alpha: float, M: int = 512) -> HkTable:
    """Tabulate H and K on the uniform grid over [0, 1) and verify the
    single-crossing structure at z1 = 1 - alpha (H < K below, H > K above)."""
    if M < 8:
        raise ValueError("M must be at least 8")
    z = np.arange(M, dtype=float) / M
    h = h_function(z, gamma)
    k = k_function(z, gamma)
    z1 = 1.0 - alpha
    gap = h - k
    cell = 1.0 / M
    below = z < z1 - cell
    above = z > z1 + cell
    ok = bool(np.all(gap[below] < 0.0) and np.all(gap[above] > 0.0))
    z_cross = _bisect(
        lambda v: float(h_function(v, gamma) - k_function(v, gamma)),
        max(z1 - 0.05, 1e-6),
        min(z1 + 0.05, 1.0 - 1e-9),
        1e-14,
    )
    gap_at_z1 = float(h_function(z1, gamma) - k_function(z1, gamma))
    return HkTable(z=z, h=h, k=k, z1=z1, z_cross=z_cross, gap_at_z1=gap_at_z1, crossing_ok=ok)
