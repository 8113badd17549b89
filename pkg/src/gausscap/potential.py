"""Bessel potentials, H-derivatives, Hilbert-Schmidt and Sobolev norms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, roots_genlaguerre

from .model_space import GaussModelSpace, HermiteExpansion, QuadGrid
from .semigroup import mehler_apply

__all__ = [
    "DerivativeTensorSample",
    "HSBoundReport",
    "MeyerEnvelope",
    "SobolevParams",
    "bessel_multiplier",
    "bessel_quadrature",
    "bessel_spectral",
    "derivative_tensor",
    "dk_hs_norm",
    "h_derivative",
    "hs_bound_check",
    "hs_norms_at",
    "lp_norm",
    "meyer_envelope",
    "meyer_ratio",
    "sobolev_norm",
]


@dataclass(frozen=True)
class SobolevParams:
    r: int
    p: float

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"order r must be a positive integer, got {self.r}")
        if not 1.0 < self.p < np.inf:
            raise ValueError(f"exponent p must lie in (1, inf), got {self.p}")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True)
class DerivativeTensorSample:
    k: int
    x: np.ndarray
    entries: np.ndarray  # shape (n,) * k

    def __post_init__(self):
        if self.entries.ndim != self.k:
            raise ValueError("tensor rank does not match derivative order")

    def is_symmetric(self, atol: float = 1e-10) -> bool:
        A = self.entries
        for i in range(self.k - 1):
            if not np.allclose(A, np.swapaxes(A, i, i + 1), atol=atol):
                return False
        return True

    @property
    def hs_norm(self) -> float:
        return float(np.sqrt(np.sum(self.entries**2)))


def bessel_multiplier(space: GaussModelSpace, r: float) -> np.ndarray:
    return (1.0 + space.orders) ** (-0.5 * r)


def bessel_spectral(u: HermiteExpansion, r: float) -> HermiteExpansion:
    """V_r = (I - L)^{-r/2} applied coefficient-wise."""
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    return HermiteExpansion(u.space, bessel_multiplier(u.space, r) * u.coeffs)


def bessel_quadrature(f, r: float, x, grid: QuadGrid, laguerre_order: int = 40,
                      time_scale: float = 4.0):
    """V_r f(x) from the Gamma-weighted time integral of P_t f.

    The time integral uses generalized Gauss-Laguerre nodes for the weight
    t^{r/2-1} e^{-t} after the substitution t = u / time_scale, which keeps
    the rule accurate for the fast decay of high Hermite degrees. Each
    P_t f(x) comes from Mehler quadrature.
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    if laguerre_order < 1:
        raise ValueError("laguerre_order must be >= 1")
    if not time_scale > 0:
        raise ValueError(f"time_scale must be positive, got {time_scale}")
    a = 0.5 * r - 1.0
    u_nodes, u_weights = roots_genlaguerre(laguerre_order, a)
    if not (np.all(np.isfinite(u_nodes)) and np.all(u_weights > 0)):
        raise ValueError(f"unstable Laguerre nodes at order {laguerre_order}")
    # weights in log space: raw weights are tiny where exp(u) is huge
    log_w = (np.log(u_weights) + u_nodes * (1.0 - 1.0 / time_scale)
             - (a + 1.0) * np.log(time_scale) - gammaln(0.5 * r))
    total = None
    for u, lw in zip(u_nodes, log_w):
        term = np.exp(lw) * np.asarray(mehler_apply(f, u / time_scale, x, grid))
        total = term if total is None else total + term
    return float(total) if np.ndim(total) == 0 else total


def h_derivative(u: HermiteExpansion, i: int) -> HermiteExpansion:
    """Partial derivative along coordinate axis ``i`` (1-based)."""
    if not 1 <= i <= u.space.n:
        raise ValueError(f"axis {i} out of range 1..{u.space.n}")
    return HermiteExpansion(u.space, u.space.derivative_matrix(i - 1) @ u.coeffs)


def derivative_tensor(u: HermiteExpansion, k: int, x) -> DerivativeTensorSample:
    """All k-th order partials of u at x, assembled by repeated h_derivative."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = u.space.n
    entries = np.empty((n,) * k)
    cache = {(): u}
    for idx in np.ndindex(*((n,) * k)):
        for depth in range(1, k + 1):
            key = idx[:depth]
            if key not in cache:
                cache[key] = h_derivative(cache[key[:-1]], key[-1] + 1)
        entries[idx] = cache[idx](x)
    if k == 0:
        entries = np.asarray(u(x))
    return DerivativeTensorSample(k, x, entries)


def dk_hs_norm(u: HermiteExpansion, k: int, x) -> float:
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return abs(float(u(np.atleast_1d(np.asarray(x, dtype=float)))))
    return derivative_tensor(u, k, x).hs_norm


def hs_norms_at(coeffs: np.ndarray, space: GaussModelSpace, k: int, points=None) -> np.ndarray:
    """Pointwise ||D^k u||_{H_k} at the grid nodes (or at ``points``).

    Vectorized over the distinct symmetric derivative tuples; used by every
    Sobolev norm evaluation.
    """
    B = space.node_basis if points is None else space.basis(points)
    if k == 0:
        return np.abs(B @ coeffs)
    _, mult, mats = space.derivative_stack(k)
    vals = np.einsum("pa,tab,b->tp", B, mats, coeffs, optimize=True)
    return np.sqrt(np.einsum("t,tp->p", mult, vals**2))


def lp_norm(values, grid: QuadGrid, p: float) -> float:
    return float(np.dot(grid.weights, np.abs(values) ** p) ** (1.0 / p))


def sobolev_norm(u: HermiteExpansion, params: SobolevParams, grid: QuadGrid | None = None) -> float:
    """sum_{k=0}^r || D^k u ||_{L^p(H_k)} with the grid as the measure."""
    grid = u.space.grid if grid is None else grid
    points = None if grid is u.space.grid else grid.nodes
    return sum(
        lp_norm(hs_norms_at(u.coeffs, u.space, k, points), grid, params.p)
        for k in range(params.r + 1)
    )


def meyer_ratio(u: HermiteExpansion, params: SobolevParams, grid: QuadGrid | None = None) -> float:
    """||(I - L)^{r/2} u||_{L^p} / ||u||_{W^{r,p}}."""
    if not np.any(u.coeffs):
        raise ValueError("Meyer ratio is undefined for the zero function")
    grid = u.space.grid if grid is None else grid
    lifted = ((1.0 + u.space.orders) ** (0.5 * params.r)) * u.coeffs
    B = u.space.node_basis if grid is u.space.grid else u.space.basis(grid.nodes)
    return lp_norm(B @ lifted, grid, params.p) / sobolev_norm(u, params, grid)


@dataclass(frozen=True)
class HSBoundReport:
    norm: float
    sup_estimate: float
    bound: float
    holds: bool
    best_frame: np.ndarray


def _frame_value(A: np.ndarray, frame: np.ndarray) -> float:
    """max |A(h_1, ..., h_k)| with each h_j a column of the orthonormal frame."""
    k = A.ndim
    if k == 1:
        return float(np.max(np.abs(frame.T @ A)))
    B = np.einsum("ij,jk,kl->il", frame.T, A, frame)
    return float(np.max(np.abs(B)))


def hs_bound_check(A, k: int | None = None, trials: int = 1000, refine_steps: int = 50,
                   seed: int = 0) -> HSBoundReport:
    """Compare ||A||_{H_k} with 2 k^k times the orthonormal-system supremum.

    The supremum is estimated from random orthonormal frames followed by
    Givens-rotation coordinate ascent on the best frame.
    """
    A = np.asarray(A.entries if isinstance(A, DerivativeTensorSample) else A, dtype=float)
    k = A.ndim if k is None else k
    if k not in (1, 2) or A.ndim != k:
        raise ValueError("only tensors of order 1 or 2 are supported")
    if k == 2 and not np.allclose(A, A.T, atol=1e-12):
        raise ValueError("tensor must be symmetric")
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    best_val, best = _frame_value(A, np.eye(n)), np.eye(n)
    for _ in range(trials):
        q, rr = np.linalg.qr(rng.standard_normal((n, n)))
        q = q * np.sign(np.diag(rr))
        val = _frame_value(A, q)
        if val > best_val:
            best_val, best = val, q
    step = 0.5
    angles = np.linspace(-np.pi, np.pi, 9)[1:-1]
    for _ in range(refine_steps):
        improved = False
        for i in range(n):
            for j in range(i + 1, n):
                for ang in step * angles:
                    G = np.eye(n)
                    c, s = np.cos(ang), np.sin(ang)
                    G[[i, i, j, j], [i, j, i, j]] = c, -s, s, c
                    cand = best @ G
                    val = _frame_value(A, cand)
                    if val > best_val + 1e-15:
                        best_val, best, improved = val, cand, True
        if not improved:
            step *= 0.5
    norm = float(np.sqrt(np.sum(A**2)))
    bound = 2.0 * k**k * best_val
    return HSBoundReport(norm, best_val, bound, norm <= bound + 1e-12, best)


@dataclass
class MeyerEnvelope:
    r: int
    p: float
    K: int
    lower: float
    upper: float
    lower_refined: float
    upper_refined: float

    @property
    def spread(self) -> float:
        return self.upper / self.lower

    @property
    def drift(self) -> float:
        return max(abs(self.lower_refined / self.lower - 1), abs(self.upper_refined / self.upper - 1))


def meyer_envelope(n: int, params: SobolevParams, samples: int = 100, seed: int = 0,
                   K: int = 6, extra: int = 4, pad: int = 7) -> MeyerEnvelope:
    """Range of Meyer ratios over random u of degree K, recomputed in degree K + extra.

    Each u has Gaussian coefficients damped by (1 + |alpha|)^(-e) with e
    uniform in [0, 2]. The same u is embedded in the larger space, so the
    two envelopes differ only by discretization. Grids use Q = K + pad.
    """
    small = GaussModelSpace(n, K, K + pad)
    big = GaussModelSpace(n, K + extra, K + extra + pad)
    embed = np.array([big.position[tuple(a)] for a in small.indices])
    rng = np.random.default_rng([int(seed), int(params.r), int(round(100 * params.p))])
    a, b = [], []
    for _ in range(samples):
        c = rng.standard_normal(small.dim) * (1.0 + small.orders) ** (-rng.uniform(0.0, 2.0))
        cb = np.zeros(big.dim)
        cb[embed] = c
        a.append(meyer_ratio(HermiteExpansion(small, c), params))
        b.append(meyer_ratio(HermiteExpansion(big, cb), params))
    return MeyerEnvelope(params.r, params.p, K, min(a), max(a), min(b), max(b))
