"""Smooth truncation of potentials and the pointwise multiplicative estimate."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .model_space import GaussModelSpace, HermiteExpansion, expand
from .potential import SobolevParams, bessel_multiplier, hs_norms_at, lp_norm, sobolev_norm
from .semigroup import TimeGrid, default_time_grid, maximal_function

__all__ = [
    "SmoothTruncation",
    "TruncationResult",
    "derivative_bounds",
    "truncation_sweep",
    "multest_sweep",
    "multiplicative_estimate_check",
    "random_ridge",
    "smooth_step",
    "truncate_potential",
]

# Inside this distance from a band edge every derivative of s is below 1e-280
# in magnitude; closed forms there evaluate 0 * inf, so they are clamped to 0.
_EDGE = 1.0 / 600.0
_SYMBOLIC_ORDER = 4


@lru_cache(maxsize=None)
def _s_derivative(order: int):
    """Numpy callable for the order-th derivative of s(u) on 0 < u < 1."""
    u = sp.Symbol("u", positive=True)
    s = sp.exp(-1 / u) / (sp.exp(-1 / u) + sp.exp(-1 / (1 - u)))
    return sp.lambdify(u, sp.diff(s, u, order), "numpy")


def _s(u, order: int = 0) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > _EDGE) & (u < 1.0 - _EDGE)
    if order == 0:
        out[u >= 1.0 - _EDGE] = 1.0
    if order <= _SYMBOLIC_ORDER:
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            out[inside] = _s_derivative(order)(u[inside])
        return out
    # central differences of the highest symbolic derivative, Richardson-extrapolated
    h = 1e-3
    def fd(step):
        return (_s(u + step, order - 1) - _s(u - step, order - 1)) / (2 * step)
    return (4 * fd(h / 2) - fd(h)) / 3


def smooth_step(t, order: int = 0):
    """T(t) = s(2t - 1) and its derivatives; 0 below 1/2, 1 above 1."""
    t = np.asarray(t, dtype=float)
    val = 2.0**order * _s(2.0 * t - 1.0, order)
    return float(val) if val.ndim == 0 else val


def derivative_bounds(i_max: int = 4, sampling: int = 20001, t_values=None) -> np.ndarray:
    """Estimates of L_i = sup_t |t^{i-1} T^{(i)}(t)| for i = 0..i_max.

    Outside [1/2, 1] every derivative vanishes and T(t)/t <= 1, so dense
    sampling of the band decides all entries.
    """
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    t = np.linspace(0.5, 1.0, sampling) if t_values is None else np.asarray(t_values, float)
    t = t[t > 0]
    table = np.zeros(i_max + 1)
    if t.size == 0:
        return table
    for i in range(i_max + 1):
        vals = np.abs(t ** (i - 1.0) * smooth_step(t, i))
        table[i] = float(np.max(vals))
    if t_values is None:
        table[0] = max(table[0], 1.0)  # T(t)/t at t = 1
    return table


@dataclass(frozen=True)
class SmoothTruncation:
    lower: float = 0.5
    upper: float = 1.0
    i_max: int = 4
    derivative_table: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if (self.lower, self.upper) != (0.5, 1.0):
            raise ValueError("only the band [1/2, 1] is implemented")
        if self.derivative_table is None:
            object.__setattr__(self, "derivative_table", derivative_bounds(self.i_max))

    @property
    def L(self) -> float:
        return float(np.max(self.derivative_table))

    def __call__(self, t, order: int = 0):
        return smooth_step(t, order)


@dataclass
class TruncationResult:
    expansion: HermiteExpansion
    ratio: float
    sobolev: float
    lp: float
    aliasing: float  # max nodal gap between T(V_r f) and its re-expansion
    aliasing_l2: float = 0.0  # the same gap in L^2 of the grid measure


def truncate_potential(f, params: SobolevParams, space: GaussModelSpace,
                       truncation: SmoothTruncation | None = None) -> TruncationResult:
    """T(V_r f) for nonnegative nodal f, and ||T(V_r f)||_{W^{r,p}} / ||f||_{L^p}."""
    T = SmoothTruncation() if truncation is None else truncation
    grid = space.grid
    f = np.broadcast_to(np.asarray(f(grid.nodes) if callable(f) else f, dtype=float),
                        (grid.size,))
    if np.any(f < 0):
        raise ValueError("f must be nonnegative at every node")
    lp = lp_norm(f, grid, params.p)
    if lp == 0:
        raise ValueError("f must not vanish identically")
    v = space.node_basis @ (bessel_multiplier(space, params.r) * (space.analysis @ f))
    tv = T(v)
    u = HermiteExpansion(space, space.analysis @ tv)
    gap = u.nodal() - tv
    aliasing = float(np.max(np.abs(gap)))
    sob = sobolev_norm(u, params)
    return TruncationResult(u, sob / lp, sob, lp, aliasing, lp_norm(gap, grid, 2.0))


def multiplicative_estimate_check(f: HermiteExpansion, r: int, k: int, q: float, x,
                                  tgrid: TimeGrid | None = None, grid=None) -> float:
    """||D^k V_r f(x)|| / [(V_r f(x))^{1-k/r} (sup_t P_t f^q(x))^{k/(rq)}].

    ``f`` must be nonnegative; the maximal function of f^q is evaluated by
    Mehler quadrature on ``grid`` (the expansion's grid by default).
    """
    if not 1 < q < np.inf:
        raise ValueError("q must lie in (1, inf)")
    if not 1 <= k < r:
        raise ValueError("need 1 <= k < r")
    space = f.space
    grid = space.grid if grid is None else grid
    tgrid = default_time_grid() if tgrid is None else tgrid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(f.nodal() < -1e-12):
        raise ValueError("f must be nonnegative")
    vr = HermiteExpansion(space, bessel_multiplier(space, r) * f.coeffs)
    num = float(hs_norms_at(vr.coeffs, space, k, x[None, :])[0])
    v = float(vr(x))

    def fq(z):
        return np.maximum(f(z), 0.0) ** q

    mf = float(maximal_function(fq, x, tgrid, grid))
    den = max(v, 0.0) ** (1.0 - k / r) * mf ** (k / (r * q))
    if den <= 0 or not np.isfinite(den):
        raise ValueError("degenerate denominator: f vanishes near x")
    return num / den


def random_ridge(rng: np.random.Generator, n: int, direction_rng: np.random.Generator | None = None):
    """Random nonnegative f(x) = s (b + a <v, x>)^2 + c with a uniform direction v.

    The law of f(Ux) does not depend on the rotation U. Drawing the scalars
    from ``rng`` and the direction from ``direction_rng`` lets sweeps in
    different dimensions share the scalars, so they differ only through n.
    """
    s = float(np.exp(rng.uniform(np.log(0.3), np.log(3.0))))
    a, b = rng.uniform(0.0, 1.5), rng.uniform(-1.0, 1.0)
    c = rng.uniform(0.0, 0.5)
    v = (rng if direction_rng is None else direction_rng).standard_normal(n)
    v /= np.linalg.norm(v)
    return lambda x: s * ((b + a * (np.asarray(x) @ v)) ** 2 + c)


def _sample_rng(seed: int, n: int, i: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(n), int(i)])


@dataclass
class SweepRow:
    n: int
    r: int
    p: float
    seed: int
    sample: int
    ratio: float
    extra: float = 0.0  # L^2 aliasing for the truncation sweep, homogeneity gap for multest


def truncation_sweep(n: int, samples: int = 100, seed: int = 0, r: int = 2, p: float = 2.0,
                K: int = 6, Q: int = 10, truncation: SmoothTruncation | None = None,
                mapper=map) -> list[SweepRow]:
    """Ratios ||T(V_r f)||_{W^{r,p}} / ||f||_p over random ridge functions f.

    ``Q`` is taken above ``K + 1`` so that re-expansion is a projection
    rather than an interpolation in every dimension.
    """
    space = GaussModelSpace(n, K, Q)
    params = SobolevParams(r, p)

    def one(i):
        # scalars are shared across dimensions (paired samples), directions are not
        f = random_ridge(_sample_rng(seed, 0, i), n, _sample_rng(seed, n, i))
        tr = truncate_potential(f, params, space, truncation)
        return SweepRow(n, r, p, seed, i, tr.ratio, tr.aliasing_l2)

    return list(mapper(one, range(samples)))


def multest_sweep(n: int = 2, samples: int = 500, seed: int = 0, r: int = 2, k: int = 1,
                  q: float = 2.0, K: int = 6, Q: int = 12, scale: float = 7.3,
                  mapper=map) -> list[SweepRow]:
    """Multiplicative-estimate ratios at random Gaussian points for random ridge f.

    ``extra`` holds |ratio(scale f) / ratio(f) - 1|.
    """
    space = GaussModelSpace(n, K, Q)
    tgrid = default_time_grid()

    def one(i):
        rng = _sample_rng(seed, n, i)
        f = expand(random_ridge(rng, n), space)
        x = rng.standard_normal(n)
        a = multiplicative_estimate_check(f, r, k, q, x, tgrid)
        b = multiplicative_estimate_check(scale * f, r, k, q, x, tgrid)
        return SweepRow(n, r, q, seed, i, a, abs(b / a - 1.0) if a else abs(b))

    return list(mapper(one, range(samples)))
