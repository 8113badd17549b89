"""Ornstein-Uhlenbeck semigroup: Mehler quadrature, spectral form, maximal function."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model_space import HermiteExpansion, QuadGrid

__all__ = [
    "TimeGrid",
    "default_time_grid",
    "maximal_function",
    "mehler_apply",
    "mehler_derivative",
    "spectral_apply",
]


@dataclass(frozen=True)
class TimeGrid:
    """Finite set of times standing in for the supremum over t > 0."""

    values: tuple[float, ...]
    includes_zero_limit: bool = True
    includes_infinity_limit: bool = True

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v <= 0 for v in vals):
            raise ValueError("time grid values must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("time grid values must be strictly increasing")
        object.__setattr__(self, "values", vals)


def default_time_grid(num: int = 64, t_min: float = 1e-4, t_max: float = 20.0) -> TimeGrid:
    return TimeGrid(tuple(np.geomspace(t_min, t_max, num)), True, True)


def _as_points(x, n: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    single = x.ndim == 1
    pts = x.reshape(-1, n) if not single else x.reshape(1, n)
    if pts.shape[1] != n:
        raise ValueError(f"point dimension {pts.shape[1]} does not match grid dimension {n}")
    return pts, single


def _shifted_values(f, t: float, pts: np.ndarray, grid: QuadGrid) -> np.ndarray:
    """f(e^{-t} x + sqrt(1 - e^{-2t}) y_j) for each point x (rows) and node y_j (cols)."""
    a = np.exp(-t)
    b = np.sqrt(-np.expm1(-2.0 * t))
    z = a * pts[:, None, :] + b * grid.nodes[None, :, :]
    vals = np.asarray(f(z.reshape(-1, pts.shape[1])), dtype=float)
    return vals.reshape(pts.shape[0], grid.size)


def mehler_apply(f, t: float, x, grid: QuadGrid):
    """P_t f(x) by Mehler's formula with the grid as the Gaussian integrator.

    ``f`` maps an ``(m, n)`` array of points to ``m`` values. ``x`` is a single
    point or an array of points; the return matches.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    pts, single = _as_points(x, grid.n)
    out = _shifted_values(f, t, pts, grid) @ grid.weights
    return float(out[0]) if single else out


def spectral_apply(u: HermiteExpansion, t: float) -> HermiteExpansion:
    """P_t on an expansion: c_alpha -> e^{-t|alpha|} c_alpha."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    return HermiteExpansion(u.space, np.exp(-t * u.space.orders) * u.coeffs)


def maximal_function(f, x, tgrid: TimeGrid, grid: QuadGrid):
    """Semigroup maximal function sup_t P_t f(x) over ``tgrid`` and its limits."""
    if not tgrid.values and not (tgrid.includes_zero_limit or tgrid.includes_infinity_limit):
        raise ValueError("empty time grid with both limits disabled")
    pts, single = _as_points(x, grid.n)
    candidates = []
    if tgrid.includes_zero_limit:
        candidates.append(np.asarray(f(pts), dtype=float))
    if tgrid.includes_infinity_limit:
        mean = grid.integrate(f(grid.nodes))
        candidates.append(np.full(pts.shape[0], mean))
    for t in tgrid.values:
        candidates.append(_shifted_values(f, t, pts, grid) @ grid.weights)
    out = np.max(np.stack(candidates), axis=0)
    return float(out[0]) if single else out


def mehler_derivative(f, t: float, x, h, k: int, grid: QuadGrid):
    """Directional derivative of order k in {1, 2} of P_t f along the unit vector h.

    Both derivatives of the k = 2 case are taken along the same direction h.
    """
    if k not in (1, 2):
        raise ValueError(f"only k = 1 or 2 is supported, got {k}")
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.shape != (grid.n,):
        raise ValueError(f"direction has shape {h.shape}, expected ({grid.n},)")
    if abs(np.linalg.norm(h) - 1.0) > 1e-10:
        raise ValueError("direction h must have unit length")
    pts, single = _as_points(x, grid.n)
    a = np.exp(-t) / np.sqrt(-np.expm1(-2.0 * t))
    z = grid.nodes @ h
    poly = z if k == 1 else z * z - 1.0
    out = a**k * (_shifted_values(f, t, pts, grid) @ (grid.weights * poly))
    return float(out[0]) if single else out
