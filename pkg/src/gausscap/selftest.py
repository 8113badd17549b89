"""Fast invariant suite behind ``gausscap selftest``.

Each check returns a plain record so that two runs with the same seed
serialize to identical bytes.
"""
from __future__ import annotations

import math

import numpy as np

from .capacity import SolverOptions, cap_potential, cap_variational, generation_condition
from .hausdorff import CoveringSchedule, spherical_hausdorff, theta_dF, SubspacePair
from .model_space import GaussModelSpace, HermiteExpansion
from .potential import SobolevParams, bessel_quadrature, bessel_spectral, meyer_ratio
from .regions import Empty, Full, ball, point
from .semigroup import mehler_apply, spectral_apply
from .sheet import SheetGrid, hitting_probability, sample_sheets, wilson_interval
from .truncation import smooth_step, truncate_potential

__all__ = ["run_selftest"]


def _check(name: str, value: float, tol: float, expected: float | None = None) -> dict:
    err = value if expected is None else abs(value - expected)
    return {"name": name, "value": float(value), "expected": expected, "tolerance": tol,
            "passed": bool(np.isfinite(err) and err <= tol)}


def _random_expansion(space, rng, scale=1.0):
    c = rng.standard_normal(space.dim) * (1.0 + space.orders) ** -1.0
    return HermiteExpansion(space, scale * c)


def run_selftest(seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    out = []

    space = GaussModelSpace(2, 6, 12)
    g = space.grid
    x2 = g.nodes[:, 0] ** 2
    out.append(_check("quadrature: weights sum to one", g.weights.sum(), 1e-13, 1.0))
    out.append(_check("quadrature: second moment", g.integrate(x2), 1e-12, 1.0))
    gram = space.node_basis.T @ (g.weights[:, None] * space.node_basis)
    out.append(_check("basis: orthonormal on the grid", np.max(np.abs(gram - np.eye(space.dim))), 1e-10))

    u = _random_expansion(space, rng)
    s, t = 0.3, 0.7
    law = spectral_apply(spectral_apply(u, s), t).coeffs - spectral_apply(u, s + t).coeffs
    out.append(_check("semigroup: P_s P_t = P_(s+t)", np.max(np.abs(law)), 1e-13))
    pts = rng.standard_normal((20, 2))
    mehler = mehler_apply(u, 0.4, pts, g)
    spec = spectral_apply(u, 0.4)(pts)
    out.append(_check("semigroup: Mehler agrees with spectral", np.max(np.abs(mehler - spec)), 1e-8))
    out.append(_check("semigroup: mass conservation",
                      abs(g.integrate(spectral_apply(u, 1.0).nodal()) - u.coeffs[0]), 1e-12))

    f = _random_expansion(GaussModelSpace(1, 8, 30), rng)
    px = rng.standard_normal((10, 1))
    bq = bessel_quadrature(f, 2.0, px, f.space.grid)
    out.append(_check("potential: spectral agrees with quadrature",
                      np.max(np.abs(bq - bessel_spectral(f, 2.0)(px))), 1e-8))

    out.append(_check("truncation: T(0.25)", smooth_step(0.25), 0.0, 0.0))
    out.append(_check("truncation: T(0.75)", smooth_step(0.75), 1e-15, 0.5))
    out.append(_check("truncation: T(2)", smooth_step(2.0), 0.0, 1.0))
    tr = truncate_potential(np.full(GaussModelSpace(1, 4).grid.size, 3.0), SobolevParams(2, 2),
                            GaussModelSpace(1, 4))
    out.append(_check("truncation: constant ratio", tr.ratio, 1e-12, 1.0 / 3.0))

    mu = HermiteExpansion(space, np.eye(space.dim)[0] * 2.0)
    out.append(_check("meyer: constants have ratio 1", meyer_ratio(mu, SobolevParams(2, 3)), 1e-12, 1.0))

    opts = SolverOptions()
    s1 = GaussModelSpace(1, 8, 12)
    for r in (1, 2):
        p2 = SobolevParams(r, 2.0)
        out.append(_check(f"capacity: full space r={r} potential",
                          cap_potential(Full(), p2, s1, opts).value, 1e-6, 1.0))
        out.append(_check(f"capacity: full space r={r} variational",
                          cap_variational(Full(), p2, s1, opts).value, 1e-6, 1.0))
    out.append(_check("capacity: empty set", cap_potential(Empty(), SobolevParams(1, 2), s1).value, 0.0, 0.0))
    small = cap_potential(ball([0.0], 0.5), SobolevParams(1, 2), s1, opts).value
    big = cap_potential(ball([0.0], 1.5), SobolevParams(1, 2), s1, opts).value
    out.append(_check("capacity: monotone in the set", max(small - big, 0.0), 1e-9))
    out.append(_check("uniqueness: generation condition m=2 p=10",
                      float(generation_condition(2, 10.0)), 0.0, 0.0))

    sched = CoveringSchedule()
    out.append(_check("hausdorff: point at d=0", spherical_hausdorff(point([0.3]), 0.0, sched).value,
                      1e-12, 1.0))
    theta = theta_dF(point([0.0]), SubspacePair.coordinate(1, [0]), 1.0, sched).value
    out.append(_check("hausdorff: theta of the origin", theta, 1e-6, 1.0 / math.sqrt(2 * math.pi)))

    grid = SheetGrid.box(2, 1, upper=1.0, spacing=0.5)
    vals = sample_sheets(grid, seed, range(4000)).reshape(4000, -1)
    out.append(_check("sheet: unit marginal variance", float(np.max(np.abs(vals.var(axis=0) - 1))), 0.1))
    c = float(np.mean(vals[:, 0] * vals[:, -1]))
    out.append(_check("sheet: corner covariance", c, 0.06, math.exp(-2.0)))
    sheet_grid = SheetGrid.box(2, 1, upper=1.0, spacing=0.25)
    out.append(_check("sheet: full space is always hit",
                      hitting_probability(Full(), sheet_grid, 200, seed).estimate, 0.0, 1.0))
    out.append(_check("sheet: empty set is never hit",
                      hitting_probability(Empty(), sheet_grid, 200, seed).estimate, 0.0, 0.0))
    lo, hi = wilson_interval(50, 100)
    out.append(_check("sheet: Wilson interval is symmetric at 1/2", abs(lo + hi - 1.0), 1e-12))
    return out
