"""Discretized (r,p)-capacities and the experiments built on them.

Two definitions are solved on a Gaussian model space:

* ``cap_potential`` -- minimize ||f||_p^p over nodal f >= 0 with V_r f >= 1
  at the constrained nodes;
* ``cap_variational`` -- minimize ||u||_{W^{r,p}}^p over degree-K expansions
  with u = 1 at the constrained nodes.

"Almost everywhere on U" becomes "at every grid node of U fattened by the
region's neighborhood margin" (one grid spacing unless set explicitly).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model_space import GaussModelSpace, HermiteExpansion
from .potential import SobolevParams, bessel_multiplier, sobolev_norm
from .regions import Region
from .solvers import interior_point, min_sobolev_equality, power_objective
from .truncation import SmoothTruncation

__all__ = [
    "CapacityResult",
    "EquivalenceResult",
    "SolverOptions",
    "UniquenessVerdict",
    "cap_potential",
    "cap_variational",
    "capacity",
    "classify_trend",
    "constraint_mask",
    "equivalence_ratio",
    "generation_condition",
    "lemma_description_check",
    "potential_operator",
    "refinement_trend",
    "uniqueness_verdict",
]


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 200
    max_outer: int = 500
    # reported residuals above this flag the result
    feasibility_tol: float = 1e-8


@dataclass
class CapacityResult:
    value: float
    optimizer: np.ndarray
    residual: float  # constraint violation, each row divided by its largest entry (when > 1)
    iterations: int
    grid_meta: tuple[int, int, int]
    definition: str
    converged: bool = True
    constrained_nodes: int = 0
    margin: float = 0.0
    gap: float = 0.0
    refinement_trend: list[float] | None = None

    def to_dict(self, region: Region | None = None, params: SobolevParams | None = None) -> dict:
        out = {
            "definition": self.definition,
            "value": float(self.value),
            "residual": float(self.residual),
            "grid_meta": {"n": self.grid_meta[0], "K": self.grid_meta[1], "Q": self.grid_meta[2]},
            "refinement_trend": None if self.refinement_trend is None
            else [float(v) for v in self.refinement_trend],
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "constrained_nodes": int(self.constrained_nodes),
            "margin": float(self.margin),
        }
        if region is not None:
            out["region"] = region.to_dict()
        if params is not None:
            out["r"], out["p"] = params.r, params.p
        return out


def constraint_mask(region: Region, space: GaussModelSpace) -> tuple[np.ndarray, float]:
    margin = region.effective_margin(space.grid.spacing if space.Q > 1 else 0.0)
    return region.contains(space.grid.nodes, margin), margin


def potential_operator(space: GaussModelSpace, r: float) -> np.ndarray:
    """Nodal matrix of V_r through the degree-K spectral projection."""
    B = space.node_basis
    return (B * bessel_multiplier(space, r)) @ space.analysis


def _scaled_residual(M, violation) -> float:
    # far-out nodes carry basis values near 1e8; judge each row relative to its size
    scale = np.maximum(np.max(np.abs(M), axis=1), 1.0)
    return float(np.max(violation / scale, initial=0.0))


def _meta(space):
    return (space.n, space.K, space.Q)


def cap_potential(region: Region, params: SobolevParams, space: GaussModelSpace,
                  opts: SolverOptions = SolverOptions()) -> CapacityResult:
    mask, margin = constraint_mask(region, space)
    J = space.grid.size
    if not mask.any():
        return CapacityResult(0.0, np.zeros(J), 0.0, 0, _meta(space), "potential",
                              margin=margin)
    V = potential_operator(space, params.r)[mask]
    G = np.vstack([V, np.eye(J)])
    h = np.concatenate([np.ones(V.shape[0]), np.zeros(J)])
    w = space.grid.weights
    rep = interior_point(power_objective(w, params.p), G, h, np.full(J, 1.1),
                         tol=opts.tol, max_iter=opts.max_iter)
    f = np.maximum(rep.x, 0.0)
    # scale onto the feasible set so that the reported value is attained
    lo = float(np.min(V @ f))
    if 0 < lo < 1:
        f = f / lo
    value = float(np.dot(w, f**params.p))
    resid = _scaled_residual(V, np.maximum(1.0 - V @ f, 0.0))
    return CapacityResult(value, f, resid, rep.iterations, _meta(space), "potential",
                          converged=rep.converged and resid <= opts.feasibility_tol,
                          constrained_nodes=int(mask.sum()), margin=margin, gap=rep.gap)


def sobolev_blocks(space: GaussModelSpace, r: int):
    B = space.node_basis
    w = space.grid.weights
    blocks = []
    for k in range(r + 1):
        if k == 0:
            blocks.append((B[None], np.ones(1), w))
            continue
        _, mult, mats = space.derivative_stack(k)
        blocks.append((np.einsum("pa,tab->tpb", B, mats, optimize=True), mult, w))
    return blocks


def cap_variational(region: Region, params: SobolevParams, space: GaussModelSpace,
                    opts: SolverOptions = SolverOptions()) -> CapacityResult:
    mask, margin = constraint_mask(region, space)
    N = space.dim
    if not mask.any():
        return CapacityResult(0.0, np.zeros(N), 0.0, 0, _meta(space), "variational",
                              margin=margin)
    A = space.node_basis[mask]
    rep = min_sobolev_equality(sobolev_blocks(space, params.r), A, np.ones(A.shape[0]),
                               params.p, tol=opts.tol, max_outer=opts.max_outer,
                               row_scale=1.0 / np.maximum(np.max(np.abs(A), axis=1), 1e-300))
    resid = _scaled_residual(A, np.abs(A @ rep.x - 1.0))
    return CapacityResult(rep.objective, rep.x, resid, rep.iterations, _meta(space),
                          "variational",
                          converged=rep.converged and resid <= opts.feasibility_tol,
                          constrained_nodes=int(mask.sum()), margin=margin, gap=rep.gap)


def capacity(region, params, space, definition: str = "potential",
             opts: SolverOptions = SolverOptions()) -> CapacityResult:
    if definition == "potential":
        return cap_potential(region, params, space, opts)
    if definition == "variational":
        return cap_variational(region, params, space, opts)
    raise ValueError(f"unknown capacity definition {definition!r}")


def refinement_trend(region, params, spaces, definition="potential",
                     opts: SolverOptions = SolverOptions()) -> CapacityResult:
    """Solve on each space in turn; the last result carries the whole trend."""
    results = [capacity(region, params, s, definition, opts) for s in spaces]
    last = results[-1]
    last.refinement_trend = [r.value for r in results]
    last.converged = all(r.converged for r in results)
    return last


@dataclass
class DescriptionReport:
    nodal_value: float
    expansion_value: float
    gap: float
    converged: bool


def lemma_description_check(region: Region, params: SobolevParams, space: GaussModelSpace,
                            opts: SolverOptions = SolverOptions()) -> DescriptionReport:
    """Compare the nodal-cone capacity with the expansion-representable cone.

    The second problem restricts f to values of a degree-K expansion that is
    nonnegative at every node; its value is never below the nodal one.
    """
    nodal = cap_potential(region, params, space, opts)
    mask, _ = constraint_mask(region, space)
    if not mask.any():
        return DescriptionReport(0.0, 0.0, 0.0, True)
    B = space.node_basis
    VU = B[mask] * bessel_multiplier(space, params.r)
    G = np.vstack([VU, B])
    h = np.concatenate([np.ones(VU.shape[0]), np.zeros(B.shape[0])])
    c0 = np.zeros(space.dim)
    c0[0] = 1.1
    rep = interior_point(power_objective(space.grid.weights, params.p, A=B), G, h, c0,
                         tol=opts.tol, max_iter=opts.max_iter)
    c = rep.x
    lo = float(np.min(VU @ c))
    if 0 < lo < 1:
        c = c / lo
    value = float(np.dot(space.grid.weights, np.maximum(B @ c, 0.0) ** params.p))
    gap = (value - nodal.value) / nodal.value if nodal.value > 0 else 0.0
    return DescriptionReport(nodal.value, value, gap, rep.converged and nodal.converged)


@dataclass
class EquivalenceResult:
    cap: CapacityResult
    ccap: CapacityResult
    ratio: float
    witness_cost: float
    witness_aliasing: float
    violation_candidate: bool = False

    def to_dict(self) -> dict:
        return {
            "cap": float(self.cap.value),
            "ccap": float(self.ccap.value),
            "ratio": float(self.ratio),
            "witness_cost": float(self.witness_cost),
            "witness_aliasing": float(self.witness_aliasing),
            "violation_candidate": bool(self.violation_candidate),
            "converged": bool(self.cap.converged and self.ccap.converged),
        }


def equivalence_ratio(region: Region, params: SobolevParams, space: GaussModelSpace,
                      truncation: SmoothTruncation | None = None,
                      opts: SolverOptions = SolverOptions()) -> EquivalenceResult:
    """Both capacities, their ratio ccap/cap, and the truncated-potential witness.

    The witness is T(V_r f) built from the potential-capacity optimizer f,
    re-expanded, and corrected onto the constraint set by the least-norm
    coefficient update; its Sobolev cost upper-bounds ccap.
    """
    truncation = SmoothTruncation() if truncation is None else truncation
    cap = cap_potential(region, params, space, opts)
    ccap = cap_variational(region, params, space, opts)
    if cap.value == 0.0:
        flag = ccap.value > opts.feasibility_tol
        return EquivalenceResult(cap, ccap, np.nan if flag else 1.0 if ccap.value == 0 else np.inf,
                                 0.0, 0.0, flag)
    mask, _ = constraint_mask(region, space)
    v = potential_operator(space, params.r) @ cap.optimizer
    tv = truncation(v)
    cw = space.analysis @ tv
    aliasing = float(np.max(np.abs(space.node_basis @ cw - tv)))
    A = space.node_basis[mask]
    cw = cw + np.linalg.lstsq(A, 1.0 - A @ cw, rcond=None)[0]
    witness = sobolev_norm(HermiteExpansion(space, cw), params) ** params.p
    return EquivalenceResult(cap, ccap, ccap.value / cap.value, witness, aliasing)


def generation_condition(m: int, p: float) -> bool:
    """|2/p - 1| < 1/m."""
    return abs(2.0 / p - 1.0) < 1.0 / m


def classify_trend(values, zero_threshold: float = 1e-3, rel_tol: float = 0.05) -> str:
    """'zero', 'bounded', or 'inconclusive' for values along a refinement sequence.

    The sequence must be (up to ``rel_tol``) nonincreasing; it trends to zero
    when the last value is below the threshold, and is bounded away when every
    value stays above it.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size < 3:
        return "inconclusive"
    scale = max(float(np.max(np.abs(vals))), zero_threshold)
    if np.any(np.diff(vals) > rel_tol * scale):
        return "inconclusive"
    if vals[-1] < zero_threshold:
        return "zero"
    if np.all(vals >= zero_threshold):
        return "bounded"
    return "inconclusive"


@dataclass
class UniquenessVerdict:
    capacities: list[float]
    margins: list[float]
    trend: str
    condition_holds: bool
    verdict: str
    m: int
    p: float
    grid_meta: tuple[int, int, int] | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "capacities": [float(c) for c in self.capacities],
            "margins": [float(m) for m in self.margins],
            "trend": self.trend,
            "generation_condition": bool(self.condition_holds),
            "verdict": self.verdict,
            "m": int(self.m),
            "p": float(self.p),
            "grid_meta": None if self.grid_meta is None else list(self.grid_meta),
            "note": self.note,
        }


def uniqueness_verdict(sigma: Region, m: int, p: float, space: GaussModelSpace,
                       zero_threshold: float = 1e-3,
                       refinement_levels=(0.2, 0.1, 0.05),
                       opts: SolverOptions = SolverOptions()) -> UniquenessVerdict:
    """L^p-uniqueness verdict for removing the closed null set ``sigma``.

    ``refinement_levels`` are shrinking neighborhood margins; cap_{2m,p} of
    each fattened set is computed on ``space``.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    cond = generation_condition(m, p)
    params = SobolevParams(2 * m, p)
    margins = [float(x) for x in refinement_levels]
    if len(margins) < 3:
        raise ValueError("at least three refinement levels are required")
    caps = [cap_potential(sigma.with_margin(mg), params, space, opts).value for mg in margins]
    trend = classify_trend(caps, zero_threshold)
    note = ""
    if not cond:
        verdict = "generation condition fails"
        if trend == "bounded":
            note = "capacity bounded away from zero, so the set is not removable"
    elif trend == "bounded":
        verdict = "not L^p-unique"
    elif trend == "zero":
        verdict = "L^p-unique"
    else:
        verdict = "inconclusive"
    return UniquenessVerdict(caps, margins, trend, cond, verdict, m, p, _meta(space), note)
