"""Gaussian Hausdorff measures of codimension d.

Sets are covered by cells of a cubic lattice; each occupied cell contributes
one ball, sized from the points of a sample cloud that fall into it. Thin
pieces (points, hyperplanes) are sampled by parametrization, so they are
seen at every resolution. A d-dimensional ball of radius r counts
omega_d r^d, omega_d = pi^{d/2} / Gamma(d/2 + 1), which makes the estimate of
a unit segment equal to 1 and that of a single point at d = 0 equal to 1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.special import erf, gammaln

from .regions import Ball, Complement, Empty, Full, Region, Slab, Union, ambient_dim

__all__ = [
    "CodimReport",
    "CoveringSchedule",
    "CoveringEstimate",
    "HausdorffReport",
    "SubspacePair",
    "codim_consistency",
    "coordinate_family",
    "gaussian_hausdorff",
    "section",
    "spherical_hausdorff",
    "theta_dF",
]

DEFAULT_WINDOW = 6.0
MAX_POINTS = 5_000_000


@dataclass(frozen=True)
class SubspacePair:
    """Orthonormal basis F of a subspace of R^n and a basis of its complement."""

    F: np.ndarray  # (n, m)
    C: np.ndarray  # (n, n - m)

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        C = np.asarray(self.C, dtype=float).reshape(F.shape[0], -1)
        if F.shape[1] + C.shape[1] != F.shape[0]:
            raise ValueError("subspace and complement dimensions must add up to n")
        full = np.hstack([F, C])
        if not np.allclose(full.T @ full, np.eye(F.shape[0]), atol=1e-10):
            raise ValueError("bases must be orthonormal")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "C", C)

    @classmethod
    def from_basis(cls, F) -> "SubspacePair":
        F = np.atleast_2d(np.asarray(F, dtype=float))
        if F.shape[0] < F.shape[1]:
            F = F.T
        q, _ = np.linalg.qr(F)
        return cls(q, null_space(q.T))

    @classmethod
    def coordinate(cls, n: int, axes) -> "SubspacePair":
        axes = sorted(int(a) for a in axes)
        eye = np.eye(n)
        rest = [i for i in range(n) if i not in axes]
        return cls(eye[:, axes], eye[:, rest])

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def m(self) -> int:
        return self.F.shape[1]


def coordinate_family(n: int, d: float) -> list[SubspacePair]:
    """All coordinate subspaces of dimension ceil(d) and ceil(d) + 1 (within n)."""
    dims = sorted({max(1, math.ceil(d)), max(1, math.ceil(d)) + 1})
    return [SubspacePair.coordinate(n, axes)
            for m in dims if m <= n for axes in itertools.combinations(range(n), m)]


@dataclass(frozen=True)
class CoveringSchedule:
    epsilons: tuple[float, ...] = tuple(2.0**-k for k in range(4, 9))
    subdivisions: int = 8  # sample points per cell side

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be positive and strictly decreasing")
        if self.subdivisions < 1:
            raise ValueError("subdivisions must be >= 1")
        object.__setattr__(self, "epsilons", eps)

    def lattice_spacing(self, m: int) -> list[float]:
        # a cell of side eps/sqrt(m) sits inside a ball of radius eps/2
        return [e / math.sqrt(m) for e in self.epsilons]


def _omega(s: float) -> float:
    return math.exp(0.5 * s * math.log(math.pi) - gammaln(0.5 * s + 1.0))


# ---------------------------------------------------------------- sections

def section(region: Region, pair: SubspacePair, x) -> Region:
    """{y in R^m : x + F y in region} as a region in subspace coordinates."""
    x = np.asarray(x, dtype=float).reshape(pair.n)
    F = pair.F
    if isinstance(region, Empty):
        return Empty()
    if isinstance(region, Full):
        return Full()
    if isinstance(region, Ball):
        c = np.asarray(region.center) - x
        cf = F.T @ c
        dist2 = float(c @ c - cf @ cf)
        if dist2 > region.radius**2 + 1e-14:
            return Empty()
        return Ball(center=tuple(cf), radius=math.sqrt(max(region.radius**2 - dist2, 0.0)))
    if isinstance(region, Slab):
        nu = np.asarray(region.normal)
        a = F.T @ nu
        shift = float(nu @ x) - region.offset
        na = float(np.linalg.norm(a))
        if na < 1e-12:
            return Full() if abs(shift) <= region.halfwidth + 1e-12 else Empty()
        return Slab(normal=tuple(a / na), offset=-shift / na, halfwidth=region.halfwidth / na)
    if isinstance(region, Union):
        return Union(tuple(section(p, pair, x) for p in region.parts))
    if isinstance(region, Complement):
        return Complement(section(region.inner, pair, x))
    raise TypeError(f"unsupported region {type(region).__name__}")


# ---------------------------------------------------------------- clouds

def _lattice(lo, hi, delta):
    axes = [np.arange(math.floor(a / delta), math.ceil(b / delta) + 1) * delta
            for a, b in zip(lo, hi)]
    count = math.prod(len(a) for a in axes)
    if count > MAX_POINTS:
        raise ValueError(f"covering needs {count} sample points; use a coarser schedule "
                         "or a smaller window")
    if count == 0:
        return np.empty((0, len(lo)))
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def _cloud(region: Region, m: int, window: float, delta: float) -> np.ndarray:
    lo, hi = np.full(m, -window), np.full(m, window)
    if isinstance(region, Empty):
        return np.empty((0, m))
    if isinstance(region, Full):
        return _lattice(lo, hi, delta)
    if isinstance(region, Ball):
        c = np.asarray(region.center)
        pts = [c[None]]
        if region.radius > 0:
            blo, bhi = np.maximum(lo, c - region.radius), np.minimum(hi, c + region.radius)
            if np.all(blo <= bhi):
                lat = _lattice(blo, bhi, delta)
                pts.append(lat[region.contains(lat)])
        return np.vstack(pts)
    if isinstance(region, Slab):
        nu = np.asarray(region.normal)
        base = region.offset * nu
        if m == 1:
            pts = [base[None]]
            lo = np.maximum(lo, region.offset - region.halfwidth)
            hi = np.minimum(hi, region.offset + region.halfwidth)
        else:
            tang = null_space(nu[None])  # (m, m-1)
            span = window * math.sqrt(m)
            t = _lattice(np.full(m - 1, -span), np.full(m - 1, span), delta)
            pts = [base + t @ tang.T]
        if region.halfwidth > 0 and np.all(lo <= hi):
            lat = _lattice(lo, hi, delta)
            pts.append(lat[region.contains(lat)])
        return np.vstack(pts)
    if isinstance(region, Union):
        parts = [_cloud(p, m, window, delta) for p in region.parts]
        return np.vstack(parts) if parts else np.empty((0, m))
    if isinstance(region, Complement):
        lat = _lattice(lo, hi, delta)
        return lat[region.contains(lat)]
    raise TypeError(f"unsupported region {type(region).__name__}")


def _cover(region: Region, m: int, window: float, h: float, subdivisions: int):
    """Centers and radii of the balls covering region within the window."""
    delta = h / subdivisions
    pts = _cloud(region, m, window, delta)
    if pts.size:
        inside = np.all(np.abs(pts) <= window + 1e-12, axis=1) & region.contains(pts)
        pts = pts[inside]
    if pts.shape[0] == 0:
        return np.empty((0, m)), np.empty(0)
    cells = np.floor(pts / h).astype(np.int64)
    _, inv = np.unique(cells, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    k = int(inv.max()) + 1
    lo = np.full((k, m), np.inf)
    hi = np.full((k, m), -np.inf)
    np.minimum.at(lo, inv, pts)
    np.maximum.at(hi, inv, pts)
    # each sample stands for a patch of side delta around it
    ext = np.minimum(hi - lo + delta, h)
    return 0.5 * (lo + hi), 0.5 * np.linalg.norm(ext, axis=1)


@dataclass
class CoveringEstimate:
    value: float
    per_level: list[float]
    epsilons: list[float]
    monotone: bool  # per-level sums nondecreasing as eps shrinks, within 5%
    window_mass_outside: float = 0.0

    def to_dict(self) -> dict:
        return {"value": self.value, "per_level": list(self.per_level),
                "epsilons": list(self.epsilons), "monotone": self.monotone,
                "window_mass_outside": self.window_mass_outside}


def _covering_sum(region, m, exponent, schedule, window, gaussian):
    if exponent < 0:
        raise ValueError("the covering exponent must be nonnegative")
    sums = []
    for h in schedule.lattice_spacing(m):
        centers, radii = _cover(region, m, window, h, schedule.subdivisions)
        contrib = _omega(exponent) * np.power(radii, exponent)
        if gaussian:
            contrib = contrib * np.exp(-0.5 * np.sum(centers**2, axis=1)) / (2 * math.pi) ** (m / 2)
        sums.append(float(np.sum(contrib)))
    mono = all(b >= a * 0.95 - 1e-15 for a, b in zip(sums, sums[1:]))
    outside = 1.0 - erf(window / math.sqrt(2.0)) ** m if gaussian else 0.0
    return CoveringEstimate(sums[-1], sums, list(schedule.epsilons), mono, outside)


def _needs_window(region: Region) -> bool:
    if isinstance(region, (Full, Complement)):
        return True
    if isinstance(region, Slab):
        return len(region.normal) > 1
    if isinstance(region, Union):
        return any(_needs_window(p) for p in region.parts)
    return False


def spherical_hausdorff(A: Region, d: float, schedule: CoveringSchedule | None = None,
                        window: float | None = None, m: int | None = None) -> CoveringEstimate:
    """Spherical Hausdorff measure S^d of A within [-window, window]^m.

    Unbounded sets need an explicit window.
    """
    schedule = CoveringSchedule() if schedule is None else schedule
    m = ambient_dim(A) if m is None else m
    if m is None:
        if isinstance(A, Empty):
            return CoveringEstimate(0.0, [0.0] * len(schedule.epsilons), list(schedule.epsilons), True)
        raise ValueError("dimension of the ambient space is ambiguous; pass m")
    if not 0 <= d <= m:
        raise ValueError(f"need 0 <= d <= {m}")
    if window is None:
        if _needs_window(A):
            raise ValueError("unbounded set: an explicit window is required")
        window = 1e6
    return _covering_sum(A, m, d, schedule, window, gaussian=False)


def theta_dF(A: Region, pair: SubspacePair, d: float, schedule: CoveringSchedule | None = None,
             window: float = DEFAULT_WINDOW) -> CoveringEstimate:
    """Gaussian-weighted S^{m-d} of a set A given in the coordinates of F."""
    schedule = CoveringSchedule() if schedule is None else schedule
    if not 0 <= d <= pair.m:
        raise ValueError(f"need 0 <= d <= {pair.m}")
    return _covering_sum(A, pair.m, pair.m - d, schedule, window, gaussian=True)


@dataclass
class HausdorffReport:
    value: float
    d: float
    per_F: list[dict]
    schedule: CoveringSchedule
    region: dict
    lower_bound_only: bool  # the supremum ran over a finite family of subspaces

    def to_dict(self) -> dict:
        return {"set": self.region, "d": self.d, "value": self.value, "per_F": self.per_F,
                "schedule": {"epsilons": list(self.schedule.epsilons),
                             "subdivisions": self.schedule.subdivisions},
                "lower_bound_only": self.lower_bound_only}


def gaussian_hausdorff(A: Region, d: float, n: int | None = None, subspace_family=None,
                       section_samples: int = 200, schedule: CoveringSchedule | None = None,
                       seed: int = 0, window: float = DEFAULT_WINDOW) -> HausdorffReport:
    """Monte Carlo estimate of the Gaussian Hausdorff measure of codimension d.

    For each subspace F the sections of A through Gaussian points of the
    complement are measured with ``theta_dF`` and averaged; the result is the
    largest average over the family, with 95% intervals per F.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    schedule = CoveringSchedule() if schedule is None else schedule
    n = ambient_dim(A) if n is None else n
    if n is None:
        raise ValueError("dimension of the ambient space is ambiguous; pass n")
    family = coordinate_family(n, d) if subspace_family is None else list(subspace_family)
    if not family:
        raise ValueError("empty subspace family")
    for pair in family:
        if pair.m < d:
            raise ValueError(f"subspace of dimension {pair.m} is smaller than d = {d}")
    streams = np.random.SeedSequence(seed).spawn(len(family))
    per_F = []
    for pair, ss in zip(family, streams):
        rng = np.random.default_rng(ss)
        k = pair.C.shape[1]
        draws = rng.standard_normal((section_samples if k else 1, k))
        vals = np.array([theta_dF(section(A, pair, pair.C @ xi), pair, d, schedule, window).value
                         for xi in draws])
        mean = float(vals.mean())
        half = 1.96 * float(vals.std(ddof=1)) / math.sqrt(vals.size) if vals.size > 1 else 0.0
        per_F.append({"basis": pair.F.T.tolist(), "value": mean, "ci": [mean - half, mean + half]})
    value = max(f["value"] for f in per_F)
    return HausdorffReport(value, float(d), per_F, schedule, A.to_dict(), True)


@dataclass
class CodimReport:
    capacities: list[float]
    capacity_trend: str
    hausdorff: dict  # d -> value
    predicts_positive_capacity: bool
    consistent: bool
    note: str

    def to_dict(self) -> dict:
        return {"capacities": list(self.capacities), "capacity_trend": self.capacity_trend,
                "hausdorff": {str(k): v for k, v in self.hausdorff.items()},
                "predicts_positive_capacity": self.predicts_positive_capacity,
                "consistent": self.consistent, "note": self.note}


def codim_consistency(sigma: Region, m: int, p: float, d_list, space, n: int | None = None,
                      refinement_levels=(0.2, 0.1, 0.05), schedule=None, section_samples=50,
                      seed: int = 0, hausdorff_threshold: float = 1e-3) -> CodimReport:
    """Pair the cap_{2m,p} trend of sigma with its Gaussian Hausdorff measures.

    Zero capacity forces rho_d(sigma) = 0 for every d < 2mp; the report flags
    an inconsistency when the capacity trends to zero while some such rho_d
    stays above ``hausdorff_threshold``, and also when a positive rho_d
    (d < 2mp) meets a capacity that trends to zero through the contrapositive.
    """
    from .capacity import uniqueness_verdict

    if isinstance(sigma, Empty):
        return CodimReport([0.0] * len(refinement_levels), "zero",
                           {float(d): 0.0 for d in d_list}, False, True, "empty set")
    verdict = uniqueness_verdict(sigma, m, p, space, refinement_levels=refinement_levels)
    n = space.n if n is None else n
    haus = {float(d): gaussian_hausdorff(sigma, d, n=n, section_samples=section_samples,
                                         schedule=schedule, seed=seed).value
            for d in d_list}
    positive = any(v > hausdorff_threshold for d, v in haus.items() if d < 2 * m * p)
    trend = verdict.trend
    consistent = not (positive and trend == "zero")
    if trend != "zero":
        note = "hypothesis of corollary not met"
        if positive:
            note += "; positive Hausdorff measure agrees with positive capacity"
    else:
        note = "capacity trends to zero" + ("" if consistent else
                                            "; some rho_d with d < 2mp stays positive")
    return CodimReport(verdict.capacities, trend, haus, positive, consistent, note)
