"""Multiparameter Ornstein-Uhlenbeck sheet: sampling, hitting, Kakutani tables.

The sheet is the centered Gaussian field on R_+^r with values in R^n and
covariance prod_i exp(-|s_i - t_i|) I_n. On a tensor grid it is produced
from white noise by the stationary AR(1) recursion along one axis at a
time; the recursions along different axes commute.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, spearmanr

from .regions import Ball, Region, Slab, Union

__all__ = [
    "HitStats",
    "KakutaniRow",
    "KakutaniTable",
    "SheetGrid",
    "SheetSample",
    "hitting_probability",
    "hitting_refinement",
    "kakutani_experiment",
    "replica_rng",
    "sample_sheet",
    "sample_sheets",
    "wilson_interval",
]


@dataclass(frozen=True)
class SheetGrid:
    axes: tuple[np.ndarray, ...]
    n: int = 1

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float).reshape(-1) for a in self.axes)
        if not axes:
            raise ValueError("at least one parameter axis is required")
        for a in axes:
            if a.size == 0:
                raise ValueError("parameter axes must be nonempty")
            if np.any(a < 0) or np.any(np.diff(a) <= 0):
                raise ValueError("parameter axes must be nonnegative and strictly increasing")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("state dimension n must be a positive integer")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def box(cls, r: int, n: int = 1, upper: float = 4.0, spacing: float = 0.25) -> "SheetGrid":
        ax = np.arange(0.0, upper + 0.5 * spacing, spacing)
        return cls(tuple(ax for _ in range(r)), n)

    @property
    def r(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def spacing(self) -> float:
        gaps = [np.min(np.diff(a)) for a in self.axes if a.size > 1]
        return float(min(gaps)) if gaps else 0.0

    def subgrid(self, step: int) -> "SheetGrid":
        return SheetGrid(tuple(a[::step] for a in self.axes), self.n)

    def to_dict(self) -> dict:
        return {"r": self.r, "n": self.n, "axes": [a.tolist() for a in self.axes]}


@dataclass
class SheetSample:
    values: np.ndarray  # grid.shape + (n,)
    seed: int
    grid: SheetGrid
    replica: int = 0


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Counter-based stream for one replica: Philox keyed by (seed, replica)."""
    if seed < 0 or replica < 0:
        raise ValueError("seed and replica must be nonnegative")
    return np.random.Generator(np.random.Philox(key=(int(seed) % 2**64) * 2**64 + int(replica)))


def _ar_along(x: np.ndarray, times: np.ndarray, axis: int) -> np.ndarray:
    """Stationary AR(1) along ``axis`` applied to white noise, in place."""
    rho = np.exp(-np.diff(times))
    innov = np.sqrt(1.0 - rho**2)
    x = np.moveaxis(x, axis, 0)
    for j in range(1, x.shape[0]):
        x[j] = rho[j - 1] * x[j - 1] + innov[j - 1] * x[j]
    return np.moveaxis(x, 0, axis)


def _noise(grid: SheetGrid, seed: int, replicas) -> np.ndarray:
    size = grid.shape + (grid.n,)
    return np.stack([replica_rng(seed, i).standard_normal(size) for i in replicas])


def sample_sheets(grid: SheetGrid, seed: int, replicas, axis_order=None) -> np.ndarray:
    """Samples for the given replica indices, shape (len(replicas),) + grid.shape + (n,)."""
    x = _noise(grid, seed, list(replicas))
    order = range(grid.r) if axis_order is None else axis_order
    for a in order:
        x = _ar_along(x, grid.axes[a], a + 1)
    return x


def sample_sheet(grid: SheetGrid, seed: int, replica: int = 0, axis_order=None) -> SheetSample:
    vals = sample_sheets(grid, seed, [replica], axis_order)[0]
    if not np.all(np.isfinite(vals)):  # pragma: no cover - defensive
        raise FloatingPointError("non-finite sheet sample")
    return SheetSample(vals, seed, grid, replica)


def wilson_interval(hits: int, total: int, level: float = 0.95) -> tuple[float, float]:
    if total <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + level / 2)
    phat = hits / total
    denom = 1 + z**2 / total
    center = (phat + z**2 / (2 * total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / total + z**2 / (4 * total**2)) / denom
    lo = 0.0 if hits == 0 else max(0.0, center - half)
    hi = 1.0 if hits == total else min(1.0, center + half)
    return float(lo), float(hi)


@dataclass
class HitStats:
    replicas: int
    hits: int
    estimate: float = field(init=False)
    ci: tuple[float, float] = field(init=False)
    grid_spacing: float = 0.0
    margin: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.hits <= self.replicas:
            raise ValueError("need 0 <= hits <= replicas")
        self.estimate = self.hits / self.replicas if self.replicas else 0.0
        self.ci = wilson_interval(self.hits, self.replicas)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci[1] - self.ci[0])

    def to_dict(self) -> dict:
        return {"replicas": self.replicas, "hits": self.hits, "estimate": self.estimate,
                "ci": list(self.ci), "grid_spacing": self.grid_spacing,
                "margin": self.margin, "seed": self.seed}


def _is_thin(region: Region) -> bool:
    if isinstance(region, Ball):
        return region.radius == 0
    if isinstance(region, Slab):
        return region.halfwidth == 0
    if isinstance(region, Union):
        return any(_is_thin(p) for p in region.parts)
    return False


def _hit_margin(region: Region, grid: SheetGrid) -> float:
    # thin sets are fattened by the parameter spacing unless told otherwise
    if region.neighborhood_margin is not None:
        return float(region.neighborhood_margin)
    return grid.spacing if _is_thin(region) else 0.0


def _first_hits(sigma: Region, grid: SheetGrid, seed: int, replicas, margin: float,
                steps=(1,)) -> np.ndarray:
    """For each replica and each subgrid step, whether the sheet hits sigma.

    The field is built slice by slice along the first parameter axis, so a
    batch stops as soon as every replica in it has hit on every subgrid.
    """
    x = _noise(grid, seed, replicas)
    for a in range(1, grid.r):
        x = _ar_along(x, grid.axes[a], a + 1)
    t0 = grid.axes[0]
    rho = np.exp(-np.diff(t0))
    innov = np.sqrt(1.0 - rho**2)
    B = x.shape[0]
    hit = np.zeros((len(steps), B), dtype=bool)
    cur = x[:, 0]
    for j in range(t0.size):
        if j:
            cur = rho[j - 1] * cur + innov[j - 1] * x[:, j]
        for s_i, step in enumerate(steps):
            if j % step:
                continue
            sub = cur[(slice(None),) + tuple(slice(None, None, step) for _ in range(grid.r - 1))]
            pts = sub.reshape(-1, grid.n)
            inside = sigma.contains(pts, margin).reshape(B, -1).any(axis=1)
            hit[s_i] |= inside
        if hit.all():
            break
    return hit


def hitting_probability(sigma: Region, grid: SheetGrid, replicas: int, seed: int = 0,
                        batch: int = 2048) -> HitStats:
    """Fraction of sheet samples with some grid point in (fattened) sigma."""
    return hitting_refinement(sigma, grid, replicas, seed, steps=(1,), batch=batch)[0]


def hitting_refinement(sigma: Region, grid: SheetGrid, replicas: int, seed: int = 0,
                       steps=(4, 2, 1), batch: int = 2048) -> list[HitStats]:
    """Hitting estimates on nested subgrids (every step-th point) from shared noise.

    Coarser subgrids see a subset of the same field values, so estimates
    never decrease as the step shrinks.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    margin = _hit_margin(sigma, grid)
    counts = np.zeros(len(steps), dtype=int)
    for lo in range(0, replicas, batch):
        idx = range(lo, min(lo + batch, replicas))
        counts += _first_hits(sigma, grid, seed, idx, margin, tuple(steps)).sum(axis=1)
    return [HitStats(replicas, int(c), grid_spacing=grid.subgrid(s).spacing, margin=margin,
                     seed=seed) for c, s in zip(counts, steps)]


@dataclass
class KakutaniRow:
    set_id: int
    region: dict
    hit: HitStats
    hit_trend: list[float]
    capacity: float
    capacity_trend: list[float]
    trend_slope: float


@dataclass
class KakutaniTable:
    rows: list[KakutaniRow]
    rank_correlation: float
    flags: list[str]

    def to_dict(self) -> dict:
        return {
            "rows": [{"set_id": r.set_id, "region": r.region, "hit": r.hit.to_dict(),
                      "hit_trend": r.hit_trend, "capacity": r.capacity,
                      "capacity_trend": r.capacity_trend, "trend_slope": r.trend_slope}
                     for r in self.rows],
            "rank_correlation": self.rank_correlation,
            "flags": list(self.flags),
        }

    def csv_rows(self) -> list[list]:
        head = ["set_id", "hit_estimate", "ci_low", "ci_high", "cap_value", "trend_slope", "seed"]
        body = [[r.set_id, r.hit.estimate, r.hit.ci[0], r.hit.ci[1], r.capacity, r.trend_slope,
                 r.hit.seed] for r in self.rows]
        return [head] + body


def kakutani_experiment(family, grid: SheetGrid, replicas: int, spaces, seed: int = 0,
                        capacity_margin: float | None = 0.0, zero_threshold: float = 1e-3,
                        steps=(2, 1)) -> KakutaniTable:
    """Hitting probabilities of the sheet next to cap_{r,2} for a family of sets.

    ``spaces`` is an increasing sequence of model spaces for the capacity
    refinement trend; the capacity column is the value on the last one.
    """
    from .capacity import classify_trend, refinement_trend
    from .potential import SobolevParams

    params = SobolevParams(grid.r, 2.0)
    rows, flags = [], []
    for i, region in enumerate(family):
        hits = hitting_refinement(region, grid, replicas, seed, steps=steps)
        creg = region if capacity_margin is None else region.with_margin(capacity_margin)
        cap = refinement_trend(creg, params, list(spaces))
        trend = list(cap.refinement_trend)
        slope = float(np.polyfit(np.arange(len(trend)), trend, 1)[0]) if len(trend) > 1 else 0.0
        rows.append(KakutaniRow(i, region.to_dict(), hits[-1], [h.estimate for h in hits],
                                cap.value, trend, slope))
        kind = classify_trend(trend, zero_threshold) if len(trend) >= 3 else (
            "zero" if cap.value < zero_threshold else "bounded")
        h = hits[-1]
        if kind == "zero" and h.ci[0] > 0:
            flags.append(f"set {i}: capacity trends to zero but hitting probability is positive")
        if kind == "bounded" and h.hits == 0:
            flags.append(f"set {i}: capacity stays positive but the sheet never hit")
    hv = [r.hit.estimate for r in rows]
    cv = [r.capacity for r in rows]
    if len(rows) > 1 and np.ptp(hv) > 0 and np.ptp(cv) > 0:
        rho = float(spearmanr(hv, cv).statistic)
    else:
        rho = float("nan")
    return KakutaniTable(rows, rho, flags)
