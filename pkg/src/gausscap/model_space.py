"""Finite-dimensional Gaussian model space.

The standard Gaussian measure on R^n is discretized by a tensor Gauss-Hermite
rule; cylindrical functions are represented by their coefficients in the
normalized probabilists' Hermite basis, truncated at total degree ``K``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations_with_replacement
from math import factorial

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "GaussModelSpace",
    "HermiteExpansion",
    "QuadGrid",
    "build_grid",
    "expand",
    "graded_lex_indices",
    "hermite_eval",
    "hermite_table",
]

# Above this order the smallest tensor weights underflow in double precision.
MAX_QUAD_ORDER = 300


def hermite_table(kmax: int, x) -> np.ndarray:
    """Values h_0(x), ..., h_kmax(x) stacked along a new last axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (kmax + 1,))
    out[..., 0] = 1.0
    if kmax >= 1:
        out[..., 1] = x
    for k in range(1, kmax):
        out[..., k + 1] = (x * out[..., k] - np.sqrt(k) * out[..., k - 1]) / np.sqrt(k + 1)
    return out


def hermite_eval(k: int, x):
    """Normalized probabilists' Hermite polynomial h_k at ``x``.

    The h_k are orthonormal in L^2 of the standard Gaussian, with h_0 = 1 and
    h_1(x) = x.
    """
    if k < 0:
        raise ValueError(f"degree must be nonnegative, got {k}")
    val = hermite_table(k, x)[..., k]
    return float(val) if val.ndim == 0 else val


def graded_lex_indices(n: int, K: int) -> np.ndarray:
    """All multi-indices of length n with total degree <= K, graded-lex ordered.

    Within each total degree the order is lexicographic descending, so for
    n = 2 the sequence starts (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
    """
    rows = []
    for deg in range(K + 1):
        block = []
        for combo in combinations_with_replacement(range(n), deg):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            block.append(tuple(alpha))
        block.sort(reverse=True)
        rows.extend(block)
    return np.array(rows, dtype=np.int64).reshape(-1, n)


@dataclass(frozen=True)
class QuadGrid:
    """Tensor Gauss-Hermite rule for the standard Gaussian on R^n."""

    nodes: np.ndarray  # (Q**n, n)
    weights: np.ndarray  # (Q**n,)
    nodes_1d: np.ndarray = field(repr=False)
    weights_1d: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def spacing(self) -> float:
        """Smallest gap between consecutive one-dimensional nodes."""
        if self.nodes_1d.size < 2:
            return np.inf
        return float(np.min(np.diff(self.nodes_1d)))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _gauss_hermite_1d(Q: int) -> tuple[np.ndarray, np.ndarray]:
    if Q < 1:
        raise ValueError(f"quadrature order must be >= 1, got {Q}")
    if Q > MAX_QUAD_ORDER:
        raise ValueError(
            f"quadrature order {Q} exceeds {MAX_QUAD_ORDER}; extreme weights underflow"
        )
    if Q == 1:
        return np.zeros(1), np.ones(1)
    # Jacobi matrix of the monic recurrence He_{k+1} = x He_k - k He_{k-1}
    off = np.sqrt(np.arange(1, Q, dtype=float))
    x = eigh_tridiagonal(np.zeros(Q), off, eigvals_only=True)
    x = 0.5 * (x - x[::-1])
    # Christoffel weights 1 / sum_k h_k(x)^2 keep full relative accuracy in the
    # tails, where squared eigenvector entries underflow
    with np.errstate(over="ignore"):
        w = 1.0 / np.sum(hermite_table(Q - 1, x) ** 2, axis=-1)
    w = 0.5 * (w + w[::-1])
    w /= w.sum()
    if not (np.all(np.isfinite(x)) and np.all(w > 0)):
        raise ValueError(f"unstable node computation at order {Q}")
    return x, w


def build_grid(space: "GaussModelSpace") -> QuadGrid:
    x, w = _gauss_hermite_1d(space.Q)
    n = space.n
    mesh = np.meshgrid(*([x] * n), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*([w] * n), indexing="ij")
    weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
    return QuadGrid(nodes=nodes, weights=weights, nodes_1d=x, weights_1d=w)


@dataclass(frozen=True)
class GaussModelSpace:
    """R^n with the standard Gaussian, Hermite degree cutoff K, Q nodes per axis."""

    n: int
    K: int
    Q: int | None = None

    def __post_init__(self):
        if self.Q is None:
            object.__setattr__(self, "Q", self.K + 1)
        if self.n < 1:
            raise ValueError("dimension n must be >= 1")
        if self.K < 0:
            raise ValueError("degree cutoff K must be >= 0")
        if self.Q < self.K + 1:
            raise ValueError(f"need Q >= K + 1 for exact projection, got Q={self.Q}, K={self.K}")

    @cached_property
    def indices(self) -> np.ndarray:
        return graded_lex_indices(self.n, self.K)

    @cached_property
    def orders(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    @property
    def dim(self) -> int:
        return self.indices.shape[0]

    @cached_property
    def position(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(a) for a in alpha): j for j, alpha in enumerate(self.indices)}

    @cached_property
    def grid(self) -> QuadGrid:
        return build_grid(self)

    def basis(self, points) -> np.ndarray:
        """Matrix of h_alpha(x) with one row per point and one column per index."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.n:
            raise ValueError(f"points have dimension {pts.shape[-1]}, space has n={self.n}")
        tab = hermite_table(self.K, pts)  # (P, n, K+1)
        out = np.ones((pts.shape[0], self.dim))
        for i in range(self.n):
            out *= tab[:, i, self.indices[:, i]]
        return out

    @cached_property
    def node_basis(self) -> np.ndarray:
        return self.basis(self.grid.nodes)

    @cached_property
    def analysis(self) -> np.ndarray:
        """Projection matrix taking nodal values to coefficients (Phi^T W)."""
        return self.node_basis.T * self.grid.weights

    def derivative_matrix(self, i: int) -> np.ndarray:
        """Coefficient map of the partial derivative along axis ``i`` (0-based)."""
        return self._derivative_matrices[i]

    @cached_property
    def _derivative_matrices(self) -> list[np.ndarray]:
        mats = []
        pos = self.position
        for i in range(self.n):
            D = np.zeros((self.dim, self.dim))
            for b, beta in enumerate(self.indices):
                up = list(int(a) for a in beta)
                up[i] += 1
                j = pos.get(tuple(up))
                if j is not None:
                    D[b, j] = np.sqrt(up[i])
            mats.append(D)
        return mats

    def derivative_stack(self, k: int) -> tuple[list[tuple[int, ...]], np.ndarray, np.ndarray]:
        """Distinct k-th order partial derivative operators.

        Returns the sorted axis tuples, their permutation multiplicities, and
        the stacked coefficient matrices (shape ``(len(tuples), dim, dim)``).
        """
        return self._derivative_stacks(k)

    def _derivative_stacks(self, k):
        cache = self.__dict__.setdefault("_dstack_cache", {})
        if k not in cache:
            tuples = list(combinations_with_replacement(range(self.n), k))
            mult = np.empty(len(tuples))
            mats = np.empty((len(tuples), self.dim, self.dim))
            for t, tup in enumerate(tuples):
                counts = np.bincount(np.array(tup, dtype=int), minlength=self.n) if k else []
                mult[t] = factorial(k) / np.prod([factorial(int(c)) for c in counts])
                M = np.eye(self.dim)
                for i in tup:
                    M = self.derivative_matrix(i) @ M
                mats[t] = M
            cache[k] = (tuples, mult, mats)
        return cache[k]

    def constant(self, value: float = 1.0) -> "HermiteExpansion":
        c = np.zeros(self.dim)
        c[0] = value
        return HermiteExpansion(self, c)

    def monomial(self, alpha) -> "HermiteExpansion":
        """The single basis element h_alpha."""
        c = np.zeros(self.dim)
        c[self.position[tuple(int(a) for a in alpha)]] = 1.0
        return HermiteExpansion(self, c)


@dataclass(frozen=True, eq=False)
class HermiteExpansion:
    """Coefficient vector over ``space.indices`` (graded-lex order)."""

    space: GaussModelSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.space.dim,):
            raise ValueError(f"expected {self.space.dim} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def coeff(self, alpha) -> float:
        j = self.space.position.get(tuple(int(a) for a in alpha))
        return 0.0 if j is None else float(self.coeffs[j])

    def __call__(self, x):
        return eval_expansion(self, x)

    def nodal(self) -> np.ndarray:
        return self.space.node_basis @ self.coeffs

    def __add__(self, other: "HermiteExpansion") -> "HermiteExpansion":
        return HermiteExpansion(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "HermiteExpansion") -> "HermiteExpansion":
        return HermiteExpansion(self.space, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "HermiteExpansion":
        return HermiteExpansion(self.space, scalar * self.coeffs)

    __rmul__ = __mul__

    def to_json(self) -> str:
        entries = [
            [[int(a) for a in alpha], float(c)]
            for alpha, c in zip(self.space.indices, self.coeffs)
        ]
        record = {"n": self.space.n, "K": self.space.K, "entries": entries}
        return json.dumps(record, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, Q: int | None = None) -> "HermiteExpansion":
        record = json.loads(text)
        space = GaussModelSpace(record["n"], record["K"], Q)
        c = np.zeros(space.dim)
        for alpha, value in record["entries"]:
            if sum(alpha) > space.K:
                raise ValueError(f"entry {alpha} exceeds degree cutoff {space.K}")
            c[space.position[tuple(alpha)]] = value
        return cls(space, c)


def expand(f, space: GaussModelSpace) -> HermiteExpansion:
    """Project ``f`` onto the degree-K Hermite basis by quadrature.

    ``f`` is either a callable taking an ``(m, n)`` array of points, or an
    array of values at the grid nodes.
    """
    values = f(space.grid.nodes) if callable(f) else f
    values = np.broadcast_to(np.asarray(values, dtype=float), (space.grid.size,))
    return HermiteExpansion(space, space.analysis @ values)


def eval_expansion(u: HermiteExpansion, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and u.space.n == 1:
        return float((u.space.basis(x.reshape(1, 1)) @ u.coeffs)[0])
    if x.shape[-1] != u.space.n:
        raise ValueError(f"point dimension {x.shape[-1]} does not match n={u.space.n}")
    vals = u.space.basis(x.reshape(-1, u.space.n)) @ u.coeffs
    return float(vals[0]) if x.ndim == 1 else vals.reshape(x.shape[:-1])
