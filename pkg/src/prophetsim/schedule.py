"""Arrival-time schedule construction.

Given the tabulated curves and a target guarantee gamma, each item receives
an arrival-time distribution on [0, 1]: a density part f_i plus an atom at
t = 1. The auxiliary curve

    g(t) = gamma * (sum_i (1 - q_i(t)) p_i(t) - t) + 1

stays in [1 - gamma, 1], and the density is

    f_i(t) = gamma * q_i'(t) * exp(-E_i(t)) / g(t),
    E_i(t) = gamma * int_0^t p_i(s) / g(s) dq_i(s).

Whatever mass the density does not place lands in the atom at t = 1. The
designated item (lowest index with maximal essential infimum; equivalently
p_i(1) = 1) is accepted unseen if it arrives at the atom; all other items
arriving at t = 1 are rejected unseen.

All integrals are Riemann-Stieltjes sums against the increments of q_i with
midpoint (endpoint-average) integrand values; cumulative tables are
accumulated exactly once and reused downstream.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .curves import CurveSet
from .distributions import Instance

ATOM_GRID_EPS = 1e-6  # validity slack attributable to grid quadrature


class ScheduleValidityError(RuntimeError):
    """An arrival density integrated to more than 1 beyond grid error."""


@dataclass(frozen=True, eq=False)
class ArrivalSchedule:
    """Tabulated arrival schedule on the same grid as its CurveSet.

    g: (N+1,), f: (n, N+1) pointwise densities (reporting only; F is the
    integrated truth), F: (n, N+1) cumulative arrival probability,
    atom: (n,) mass at t=1, exponent: (n, N+1) tables of E_i(t).
    exponent is None for schedules reconstructed from a dump.
    """

    gamma: float
    grid: np.ndarray
    g: np.ndarray
    f: np.ndarray
    F: np.ndarray
    atom: np.ndarray
    item_one: int
    exponent: np.ndarray | None

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def N(self) -> int:
        return self.F.shape[1] - 1


def designate_item_one(inst: Instance) -> int:
    """Lowest index among items maximizing the essential infimum (0-based)."""
    ess_infs = [d.support[0] for d in inst.items]
    return int(np.argmax(np.asarray(ess_infs) >= max(ess_infs)))


def g_values(cs: CurveSet, gamma: float) -> np.ndarray:
    """Auxiliary curve g on the grid; g(0) = 1 and g >= 1 - gamma."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma={gamma!r} outside (0, 1)")
    return gamma * (np.sum((1.0 - cs.q) * cs.p, axis=0) - cs.grid) + 1.0


def build_schedule(cs: CurveSet, gamma: float) -> ArrivalSchedule:
    """Construct the arrival schedule at guarantee gamma from tabulated curves.

    Raises ScheduleValidityError when a density integrates past 1 by more
    than the grid-error allowance; atoms in (-1e-6, 0) are clamped to zero
    with a warning.
    """
    g = g_values(cs, gamma)
    if float(np.min(g)) < 1.0 - gamma - 1e-9:
        raise ScheduleValidityError("auxiliary curve g dipped below 1 - gamma")

    dq = cs.q[:, 1:] - cs.q[:, :-1]
    p_mid = 0.5 * (cs.p[:, 1:] + cs.p[:, :-1])
    g_mid = 0.5 * (g[1:] + g[:-1])

    dE = gamma * p_mid * dq / g_mid[None, :]
    E = np.concatenate([np.zeros((cs.n, 1)), np.cumsum(dE, axis=1)], axis=1)
    E_mid = 0.5 * (E[:, 1:] + E[:, :-1])

    dF = gamma * dq * np.exp(-E_mid) / g_mid[None, :]
    F = np.concatenate([np.zeros((cs.n, 1)), np.cumsum(dF, axis=1)], axis=1)

    # pointwise density table for reporting/plotting; F above is the truth
    slope = np.gradient(cs.q, cs.grid, axis=1)
    f = gamma * slope * np.exp(-E) / g[None, :]

    atom = 1.0 - F[:, -1]
    for i in np.nonzero(atom < 0.0)[0]:
        if atom[i] < -ATOM_GRID_EPS:
            raise ScheduleValidityError(
                f"item {i}: arrival density mass {F[i, -1]!r} exceeds 1 beyond grid error"
            )
        warnings.warn(f"item {i}: atom {atom[i]:.3e} clamped to 0", stacklevel=2)
    atom = np.maximum(atom, 0.0)

    item_one = int(np.argmax(cs.p[:, -1] >= 1.0 - 1e-9))
    if cs.p[item_one, -1] < 1.0 - 1e-9:
        raise ScheduleValidityError("no item reaches p_i(1) = 1; curves are inconsistent")
    return ArrivalSchedule(
        gamma=float(gamma), grid=cs.grid, g=g, f=f, F=F, atom=atom,
        item_one=item_one, exponent=E,
    )


def schedule_mass(sched: ArrivalSchedule, i: int) -> float:
    """Integrated density mass of item i (excludes the atom)."""
    return float(sched.F[i, -1])


def sample_arrival(sched: ArrivalSchedule, i: int, rng: np.random.Generator) -> float:
    """One arrival time for item i: the atom with probability atom_i, else
    inverse transform on the tabulated cumulative F_i."""
    return float(arrival_from_uniform(sched, i, rng.random()))


def arrival_from_uniform(sched: ArrivalSchedule, i: int, u):
    """Inverse-transform arrival times for item i from uniforms in [0,1).

    u >= F_i(1) lands on the atom, i.e. exactly 1.0; vectorized."""
    u = np.asarray(u, dtype=float)
    xp, tp = _strict_inverse_table(sched.F[i], sched.grid)
    if xp.size == 0:  # no continuous mass at all: everything is the atom
        out = np.ones_like(u)
    else:
        out = np.interp(u, xp, tp)
    return np.where(u >= sched.F[i, -1], 1.0, out)


def _strict_inverse_table(F: np.ndarray, grid: np.ndarray):
    """Inverse table keeping only the endpoints of each flat run of F.

    Duplicated F values at a run's two endpoints make np.interp jump across
    the zero-density stretch instead of spreading mass over it; interior
    points of flat runs are dropped. u exactly at a run height is measure
    zero and may land on either side."""
    rises_into = np.concatenate([[False], F[1:] > F[:-1]])
    rises_out = np.concatenate([F[1:] > F[:-1], [False]])
    keep = rises_into | rises_out
    return F[keep], grid[keep]


# -- dump / re-ingest ----------------------------------------------------------


def _meta_path(csv_path: str) -> str:
    base = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return base + "_meta.json"


def write_schedule_csv(sched: ArrivalSchedule, path: str) -> str:
    """RFC-4180 CSV (columns t, g, then f_i, F_i per item, shortest round-trip
    float repr) plus a JSON sidecar with gamma, atoms, and item_one.
    Returns the sidecar path."""
    n = sched.n
    header = ["t", "g"]
    for i in range(n):
        header += [f"f_{i + 1}", f"F_{i + 1}"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\r\n")
        for k in range(sched.grid.size):
            row = [repr(float(sched.grid[k])), repr(float(sched.g[k]))]
            for i in range(n):
                row += [repr(float(sched.f[i, k])), repr(float(sched.F[i, k]))]
            fh.write(",".join(row) + "\r\n")
    meta = {
        "gamma": sched.gamma,
        "atom": [float(a) for a in sched.atom],
        "item_one": sched.item_one,
        "n": n,
        "grid_n": sched.N,
    }
    mpath = _meta_path(path)
    with open(mpath, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)
    return mpath


def load_schedule_dump(path: str) -> ArrivalSchedule:
    """Re-ingest a schedule dump (CSV + JSON sidecar); F tables round-trip
    bit-identically. The exponent table is not part of the dump."""
    with open(_meta_path(path), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim == 1:
        data = data[None, :]
    n = int(meta["n"])
    grid = data[:, 0]
    g = data[:, 1]
    f = data[:, 2 : 2 + 2 * n : 2].T.copy()
    F = data[:, 3 : 3 + 2 * n : 2].T.copy()
    return ArrivalSchedule(
        gamma=float(meta["gamma"]), grid=grid, g=g, f=f, F=F,
        atom=np.asarray(meta["atom"], dtype=float), item_one=int(meta["item_one"]),
        exponent=None,
    )
