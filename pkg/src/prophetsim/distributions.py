"""Value distributions and problem instances.

Only continuous families are supported: the threshold machinery downstream
needs continuous CDFs so that acceptance ties have measure zero. Discrete
atoms can still be ingested through an explicit smoothing step that spreads
each atom (v, p) over a short uniform sliver [v, v + eps].

All sampling is inverse-transform from a caller-owned numpy Generator, so any
run is reproducible from its seed alone. Unbounded supports use the float
+inf sentinel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

INF = math.inf

KINDS = ("uniform", "exponential", "pareto", "piecewise_linear_cdf")


class InstanceError(ValueError):
    """An instance document or distribution parameter set failed validation."""


@dataclass(frozen=True)
class ValueDist:
    """One item's value distribution.

    Exactly one parameter group is meaningful for a given ``kind``:

    - ``uniform``: ``lo``, ``hi`` with ``0 <= lo < hi``
    - ``exponential``: ``rate > 0`` (CDF ``1 - exp(-rate*v)``)
    - ``pareto``: ``scale > 0``, ``shape > 0`` (CDF ``1 - (scale/v)**shape``
      for ``v >= scale``; mean is infinite when ``shape <= 1``)
    - ``piecewise_linear_cdf``: ``points``, a tuple of ``(value, cum)`` pairs
      with strictly increasing nonnegative values and nondecreasing cumulative
      probabilities running from 0 to 1

    Use the factory staticmethods rather than the raw constructor.
    """

    kind: str
    lo: float = 0.0
    hi: float = 0.0
    rate: float = 0.0
    scale: float = 0.0
    shape: float = 0.0
    points: tuple = ()

    # -- factories -----------------------------------------------------------

    @staticmethod
    def uniform(lo: float, hi: float) -> "ValueDist":
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InstanceError("uniform: lo and hi must be finite")
        if lo < 0:
            raise InstanceError("uniform: lo must be nonnegative")
        if not hi > lo:
            raise InstanceError("uniform: hi must exceed lo")
        return ValueDist(kind="uniform", lo=float(lo), hi=float(hi))

    @staticmethod
    def exponential(rate: float) -> "ValueDist":
        if not (math.isfinite(rate) and rate > 0):
            raise InstanceError("exponential: rate must be a positive real")
        return ValueDist(kind="exponential", rate=float(rate))

    @staticmethod
    def pareto(scale: float, shape: float) -> "ValueDist":
        if not (math.isfinite(scale) and scale > 0):
            raise InstanceError("pareto: scale must be a positive real")
        if not (math.isfinite(shape) and shape > 0):
            raise InstanceError("pareto: shape must be a positive real")
        return ValueDist(kind="pareto", scale=float(scale), shape=float(shape))

    @staticmethod
    def piecewise(points) -> "ValueDist":
        pts = tuple((float(v), float(c)) for v, c in points)
        if len(pts) < 2:
            raise InstanceError("piecewise_linear_cdf: need at least 2 points")
        values = [v for v, _ in pts]
        cums = [c for _, c in pts]
        if values[0] < 0:
            raise InstanceError("piecewise_linear_cdf: values must be nonnegative")
        for k in range(1, len(pts)):
            if not values[k] > values[k - 1]:
                # 1-based point index in messages
                raise InstanceError(
                    f"piecewise_linear_cdf: values not strictly increasing at point {k + 1}"
                )
            if cums[k] < cums[k - 1]:
                raise InstanceError(
                    f"piecewise_linear_cdf: cumulative probability decreases at point {k + 1}"
                )
        if cums[0] != 0.0:
            raise InstanceError("piecewise_linear_cdf: first cumulative probability must be 0")
        if cums[-1] != 1.0:
            raise InstanceError("piecewise_linear_cdf: last cumulative probability must be 1")
        return ValueDist(kind="piecewise_linear_cdf", points=pts)

    # -- evaluation ----------------------------------------------------------

    def cdf(self, v):
        """CDF evaluated elementwise; accepts scalars or arrays (+inf ok)."""
        v = np.asarray(v, dtype=float)
        if self.kind == "uniform":
            out = np.clip((v - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        elif self.kind == "exponential":
            out = -np.expm1(-self.rate * np.maximum(v, 0.0))
            out = np.where(np.isposinf(v), 1.0, out)
        elif self.kind == "pareto":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(v >= self.scale, 1.0 - (self.scale / v) ** self.shape, 0.0)
            out = np.where(np.isposinf(v), 1.0, out)
        else:
            values, cums = self._tables()
            out = np.interp(v, values, cums, left=0.0, right=1.0)
        return out if out.ndim else float(out)

    def quantile(self, u):
        """Smallest v with cdf(v) >= u, elementwise; u=1 on an unbounded
        support returns +inf; u=0 returns the essential infimum."""
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u > 1.0)):
            raise ValueError("quantile level must lie in [0, 1]")
        if self.kind == "uniform":
            out = self.lo + u * (self.hi - self.lo)
        elif self.kind == "exponential":
            with np.errstate(divide="ignore"):
                out = -np.log1p(-u) / self.rate
        elif self.kind == "pareto":
            with np.errstate(divide="ignore"):
                out = self.scale * (1.0 - u) ** (-1.0 / self.shape)
        else:
            values, cums = self._tables()
            idx = np.searchsorted(cums, u, side="left")
            idx = np.minimum(idx, len(cums) - 1)
            lo_i = np.maximum(idx - 1, 0)
            c0, c1 = cums[lo_i], cums[idx]
            v0, v1 = values[lo_i], values[idx]
            rise = c1 - c0
            # exact knot hit (or flat run) -> the knot value; interior -> linear
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = np.where(rise > 0, (u - c0) / np.where(rise > 0, rise, 1.0), 1.0)
            out = np.where(u <= c0, v0, v0 + frac * (v1 - v0))
            out = np.where(u <= cums[0], values[0], out)
        return out if out.ndim else float(out)

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform sample(s) using the caller's generator."""
        return self.quantile(rng.random(size))

    @property
    def support(self):
        """(ess_inf, ess_sup); ess_sup may be +inf."""
        if self.kind == "uniform":
            return (self.lo, self.hi)
        if self.kind == "exponential":
            return (0.0, INF)
        if self.kind == "pareto":
            return (self.scale, INF)
        values, cums = self._tables()
        ess_inf = values[np.max(np.flatnonzero(cums == 0.0))]
        ess_sup = values[np.min(np.flatnonzero(cums == 1.0))]
        return (float(ess_inf), float(ess_sup))

    def _tables(self):
        pts = np.asarray(self.points, dtype=float)
        return pts[:, 0], pts[:, 1]


# -- op-style helpers (thin wrappers over the methods) ------------------------


def cdf_eval(d: ValueDist, v: float) -> float:
    return float(d.cdf(v))


def quantile_eval(d: ValueDist, u: float) -> float:
    return float(d.quantile(u))


def sample(d: ValueDist, rng: np.random.Generator, size=None):
    return d.sample(rng, size)


def support_bounds(d: ValueDist):
    return d.support


@dataclass(frozen=True)
class Instance:
    """An ordered collection of item distributions."""

    items: tuple
    label: str = ""

    def __post_init__(self):
        if len(self.items) == 0:
            raise InstanceError("empty item list")

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def is_iid(self) -> bool:
        """Field-level equality of all items (used for gamma auto-detection)."""
        return all(d == self.items[0] for d in self.items[1:])

    def supports(self):
        return [d.support for d in self.items]


def smooth_atoms(atoms, eps: float | None = None) -> ValueDist:
    """Convert a discrete distribution into a piecewise-linear CDF by
    spreading each atom (v, p) over a uniform sliver [v, v + width].

    width = ``eps`` when given, else 1e-6*v; an atom at v=0 falls back to
    1e-6 times the largest atom value (1e-6 if all atoms sit at 0).
    """
    atoms = sorted(((float(v), float(p)) for v, p in atoms), key=lambda a: a[0])
    if not atoms:
        raise InstanceError("discrete distribution needs at least one atom")
    total = math.fsum(p for _, p in atoms)
    if abs(total - 1.0) > 1e-9:
        raise InstanceError(f"atom probabilities sum to {total!r}, expected 1")
    values = [v for v, _ in atoms]
    if values[0] < 0:
        raise InstanceError("atom values must be nonnegative")
    if len(set(values)) != len(values):
        raise InstanceError("atom values must be distinct")
    vmax = max(values)
    zero_fallback = 1e-6 * vmax if vmax > 0 else 1e-6
    points = []
    cum = 0.0
    for k, (v, p) in enumerate(atoms):
        if p <= 0:
            raise InstanceError("atom probabilities must be positive")
        width = eps if eps is not None else (1e-6 * v if v > 0 else zero_fallback)
        if width <= 0:
            raise InstanceError("smoothing width must be positive")
        if k + 1 < len(atoms) and v + width >= atoms[k + 1][0]:
            raise InstanceError(
                f"smoothing width {width!r} overlaps the next atom at {atoms[k + 1][0]!r}"
            )
        if not points or points[-1][0] < v:
            points.append((v, cum))
        cum += p / total  # renormalize away float dust in the input
        points.append((v + width, min(cum, 1.0)))
    points[-1] = (points[-1][0], 1.0)
    return ValueDist.piecewise(points)


def _parse_item(k: int, item, smooth: float | None) -> ValueDist:
    if not isinstance(item, dict):
        raise InstanceError(f"item {k}: expected an object")
    kind = item.get("kind")
    try:
        if kind == "uniform":
            return ValueDist.uniform(item["lo"], item["hi"])
        if kind == "exponential":
            return ValueDist.exponential(item["rate"])
        if kind == "pareto":
            return ValueDist.pareto(item["scale"], item["shape"])
        if kind == "piecewise_linear_cdf":
            return ValueDist.piecewise(item["points"])
        if kind == "discrete":
            if smooth is None:
                raise InstanceError(
                    "discrete distributions require smoothing (pass --smooth / smooth=)"
                )
            return smooth_atoms(item["atoms"], None if smooth <= 0 else smooth)
    except KeyError as exc:
        raise InstanceError(f"item {k}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"item {k}: {exc}") from None
    raise InstanceError(f"item {k}: unknown kind {kind!r}")


def parse_instance(doc, smooth: float | None = None) -> Instance:
    """Build an Instance from a JSON document (text or parsed dict).

    ``smooth``: enable atom smoothing; a positive value is the absolute sliver
    width, 0 requests the per-atom default width.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    items = doc.get("items")
    if not isinstance(items, list) or not items:
        raise InstanceError("empty item list")
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise InstanceError("label must be a string")
    dists = tuple(_parse_item(k + 1, item, smooth) for k, item in enumerate(items))
    return Instance(items=dists, label=label)


def load_instance(path, smooth: float | None = None) -> Instance:
    """Parse an instance file; the label defaults to the file stem."""
    with open(path, "r", encoding="utf-8") as fh:
        inst = parse_instance(fh.read(), smooth=smooth)
    if not inst.label:
        import os

        inst = Instance(items=inst.items, label=os.path.splitext(os.path.basename(path))[0])
    return inst
