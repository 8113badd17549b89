"""Constructive descriptions of sets in R^n.

Regions are closed under union and complement. A ball of radius 0 is a
point and a slab of half-width 0 is a hyperplane; these thin sets are what
the margin-fattening and the Hausdorff estimators exist for.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "Ball",
    "Complement",
    "Empty",
    "Full",
    "Region",
    "Slab",
    "Union",
    "ambient_dim",
    "ball",
    "point",
    "region_from_dict",
    "slab",
]


@dataclass(frozen=True)
class Region:
    neighborhood_margin: float | None = field(default=None, kw_only=True)

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        """Membership of each row of ``points`` in the set fattened by ``margin``.

        Negative margins erode the set.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self._contains(pts, margin)

    def _contains(self, pts, margin):  # pragma: no cover - abstract
        raise NotImplementedError

    def with_margin(self, margin: float | None) -> "Region":
        return replace(self, neighborhood_margin=margin)

    def effective_margin(self, default: float) -> float:
        return default if self.neighborhood_margin is None else float(self.neighborhood_margin)

    def to_dict(self) -> dict:
        d = self._to_dict()
        if self.neighborhood_margin is not None:
            d["margin"] = float(self.neighborhood_margin)
        return d

    def _to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def __or__(self, other: "Region") -> "Union":
        return Union((self, other))

    def __invert__(self) -> "Complement":
        return Complement(self)


@dataclass(frozen=True)
class Empty(Region):
    def _contains(self, pts, margin):
        return np.zeros(pts.shape[0], dtype=bool)

    def _to_dict(self):
        return {"kind": "empty"}


@dataclass(frozen=True)
class Full(Region):
    def _contains(self, pts, margin):
        return np.ones(pts.shape[0], dtype=bool)

    def _to_dict(self):
        return {"kind": "full"}


@dataclass(frozen=True)
class Ball(Region):
    center: tuple[float, ...] = (0.0,)
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def _contains(self, pts, margin):
        d = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return d <= self.radius + margin + 1e-12

    def _to_dict(self):
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Slab(Region):
    """{x : |<normal, x> - offset| <= halfwidth} with a unit normal."""

    normal: tuple[float, ...] = (1.0,)
    offset: float = 0.0
    halfwidth: float = 0.0

    def __post_init__(self):
        nv = np.atleast_1d(np.asarray(self.normal, dtype=float))
        if abs(np.linalg.norm(nv) - 1.0) > 1e-10:
            raise ValueError("slab normal must have unit length")
        if self.halfwidth < 0:
            raise ValueError("halfwidth must be nonnegative")
        object.__setattr__(self, "normal", tuple(float(c) for c in nv))

    def _contains(self, pts, margin):
        s = pts @ np.asarray(self.normal) - self.offset
        return np.abs(s) <= self.halfwidth + margin + 1e-12

    def _to_dict(self):
        return {"kind": "slab", "normal": list(self.normal), "offset": self.offset,
                "halfwidth": self.halfwidth}


@dataclass(frozen=True)
class Union(Region):
    parts: tuple[Region, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def _contains(self, pts, margin):
        out = np.zeros(pts.shape[0], dtype=bool)
        for part in self.parts:
            out |= part._contains(pts, margin)
        return out

    def _to_dict(self):
        return {"kind": "union", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class Complement(Region):
    inner: Region = field(default_factory=Empty)

    def _contains(self, pts, margin):
        return ~self.inner._contains(pts, -margin)

    def _to_dict(self):
        return {"kind": "complement", "inner": self.inner.to_dict()}


def ball(center, radius: float, margin: float | None = None) -> Ball:
    return Ball(center=tuple(np.atleast_1d(center)), radius=radius, neighborhood_margin=margin)


def point(center, margin: float | None = None) -> Ball:
    return ball(center, 0.0, margin)


def slab(normal, offset: float, halfwidth: float, margin: float | None = None) -> Slab:
    return Slab(normal=tuple(np.atleast_1d(normal)), offset=offset, halfwidth=halfwidth,
                neighborhood_margin=margin)


def ambient_dim(region: Region) -> int | None:
    """Dimension fixed by the region's geometry; None for empty and full sets."""
    if isinstance(region, Ball):
        return len(region.center)
    if isinstance(region, Slab):
        return len(region.normal)
    if isinstance(region, Union):
        dims = {ambient_dim(p) for p in region.parts} - {None}
        if len(dims) > 1:
            raise ValueError(f"union mixes dimensions {sorted(dims)}")
        return dims.pop() if dims else None
    if isinstance(region, Complement):
        return ambient_dim(region.inner)
    return None


def region_from_dict(d: dict) -> Region:
    """Inverse of ``Region.to_dict``; unknown keys are rejected."""
    d = dict(d)
    kind = d.pop("kind")
    margin = d.pop("margin", None)
    if kind == "empty":
        out = Empty()
    elif kind == "full":
        out = Full()
    elif kind == "ball":
        out = Ball(center=tuple(d.pop("center")), radius=float(d.pop("radius")))
    elif kind == "point":
        out = Ball(center=tuple(d.pop("center")), radius=0.0)
    elif kind == "slab":
        out = Slab(normal=tuple(d.pop("normal")), offset=float(d.pop("offset", 0.0)),
                   halfwidth=float(d.pop("halfwidth", 0.0)))
    elif kind == "union":
        out = Union(tuple(region_from_dict(p) for p in d.pop("parts")))
    elif kind == "complement":
        out = Complement(region_from_dict(d.pop("inner")))
    else:
        raise ValueError(f"unknown region kind {kind!r}")
    if d:
        raise ValueError(f"unknown region fields {sorted(d)} for kind {kind!r}")
    return out.with_margin(margin)
