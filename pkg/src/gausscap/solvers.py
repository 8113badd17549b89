"""Convex solvers behind the capacity problems.

``interior_point`` minimizes a smooth convex objective subject to linear
inequalities ``G x >= h`` with a primal-dual path-following method.
``min_sobolev_equality`` minimizes a sum of weighted L^p norms of linear
images of ``x`` subject to linear equalities.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lstsq, null_space

__all__ = ["SolverReport", "interior_point", "min_sobolev_equality", "power_objective"]


@dataclass
class SolverReport:
    x: np.ndarray
    objective: float
    converged: bool
    iterations: int
    residual: float  # max constraint violation
    gap: float  # duality gap (inequality problems) or relative change (equality problems)
    extra: dict = field(default_factory=dict)


def power_objective(weights: np.ndarray, p: float, A: np.ndarray | None = None):
    """sum_j w_j (A x)_j^p for (A x) >= 0; A defaults to the identity.

    Returns a callable giving (value, gradient, Hessian).
    """

    def obj(x):
        z = x if A is None else A @ x
        zp = np.maximum(z, 1e-300)
        val = float(np.dot(weights, zp**p))
        g = weights * p * zp ** (p - 1)
        hd = weights * p * (p - 1) * zp ** (p - 2)
        if A is None:
            return val, g, np.diag(hd)
        return val, A.T @ g, (A.T * hd) @ A

    return obj


def _solve_spd(M, rhs):
    try:
        return cho_solve(cho_factor(M, check_finite=False), rhs, check_finite=False)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * max(1.0, float(np.max(np.abs(np.diag(M)))))
        return np.linalg.solve(M + jitter * np.eye(M.shape[0]), rhs)


def interior_point(objective, G: np.ndarray, h: np.ndarray, x0: np.ndarray, *,
                   tol: float = 1e-10, dual_tol: float = 1e-6,
                   max_iter: int = 200) -> SolverReport:
    """Primal-dual interior point for min f(x) s.t. G x >= h.

    ``objective(x)`` returns (value, gradient, Hessian). Infeasible starts are
    allowed; slacks are initialized positive. ``tol`` bounds complementarity
    and primal infeasibility; the stationarity residual gets the looser
    ``dual_tol`` because objectives like |x|^p with p < 2 have Hessians that
    blow up at the boundary and stall it well above machine precision.
    """
    x = np.array(x0, dtype=float)
    m = G.shape[0]
    if m == 0:
        raise ValueError("interior_point needs at least one inequality")
    # unit row scaling; constraint rows of far-out nodes are otherwise huge
    rs = np.max(np.abs(G), axis=1)
    rs[rs == 0] = 1.0
    G0, h0 = G, h
    G, h = G / rs[:, None], h / rs
    s = np.maximum(G @ x - h, 1.0)
    lam = np.ones(m)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        val, g, H = objective(x)
        r_dual = g - G.T @ lam
        r_prim = G @ x - s - h
        mu = float(s @ lam) / m
        scale = 1.0 + abs(val)
        dual_scale = 1.0 + max(np.max(np.abs(g)), np.max(np.abs(G.T @ lam)))
        primal_ok = np.max(np.abs(r_prim), initial=0) <= tol * (1.0 + np.max(np.abs(h)))
        dual_ok = np.max(np.abs(r_dual)) <= dual_tol * dual_scale
        if mu * m <= tol * scale and primal_ok and dual_ok:
            converged = True
            break
        if mu * m <= 1e-6 * tol * scale:
            # complementarity exhausted; further steps only lose precision
            break

        def direction(target):
            # reduced Newton system on dx; target is the desired s*lam
            d = lam / s
            M = H + (G.T * d) @ G
            rhs = -r_dual + G.T @ ((target - s * lam) / s - d * r_prim)
            dx = _solve_spd(M, rhs)
            ds = G @ dx + r_prim
            dlam = (target - s * lam - lam * ds) / s
            return dx, ds, dlam

        def max_step(v, dv):
            neg = dv < 0
            return min(1.0, float(np.min(-v[neg] / dv[neg]))) if np.any(neg) else 1.0

        # Mehrotra predictor-corrector
        dx_a, ds_a, dl_a = direction(np.zeros(m))
        a_aff = min(max_step(s, ds_a), max_step(lam, dl_a))
        mu_aff = float((s + a_aff * ds_a) @ (lam + a_aff * dl_a)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        dx, ds, dl = direction(sigma * mu - ds_a * dl_a)
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dl))):
            break
        alpha = 0.99 * min(max_step(s, ds), max_step(lam, dl))
        alpha = min(alpha, 1.0)
        x = x + alpha * dx
        s = s + alpha * ds
        lam = lam + alpha * dl
    val = objective(x)[0]
    resid = float(np.max(np.maximum(h0 - G0 @ x, 0.0), initial=0.0))
    return SolverReport(x, val, converged, it, resid, float(s @ lam))


def min_sobolev_equality(blocks, A: np.ndarray, b: np.ndarray, p: float, *,
                         tol: float = 1e-11, max_outer: int = 500,
                         rank_tol: float = 1e-10, row_scale=None) -> SolverReport:
    """Minimize (sum_k ||M_k x||_p)^p subject to A x = b.

    ``blocks`` is a list of (mats, mult, weights): ``mats`` has shape
    (T, P, N) mapping x to T component fields at P nodes, the pointwise
    Hilbert-Schmidt norm is sqrt(sum_t mult_t (mats_t x)^2), and ``weights``
    integrates over nodes.

    The sum of norms is handled through the variational identity
    (sum a_k)^p = min over the simplex of sum a_k^p / theta_k^{p-1}; for
    fixed theta the problem is smooth and is solved on the null space of A.
    Rank-deficient or inconsistent constraints are replaced by their
    least-squares projection (rows weighted by ``row_scale`` when given).
    """
    N = A.shape[1] if A.size else blocks[0][0].shape[2]
    if A.shape[0]:
        rw = np.ones(A.shape[0]) if row_scale is None else np.asarray(row_scale, float)
        U, sv, Vt = np.linalg.svd(A * rw[:, None], full_matrices=False)
        rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size and sv[0] > 0 else 0
        U, sv, Vt = U[:, :rank], sv[:rank], Vt[:rank]
        def particular(rhs):
            return Vt.T @ ((U.T @ (rhs * rw)) / sv)

        x_part = particular(b)
        x_part = x_part + particular(b - A @ x_part)  # one step of iterative refinement
        Z = null_space(Vt) if rank else np.eye(N)
    else:
        rank = 0
        x_part = np.zeros(N)
        Z = np.eye(N)
    residual = float(np.max(np.abs(A @ x_part - b), initial=0.0))

    def norms(x):
        out = []
        for mats, mult, w in blocks:
            vals = np.einsum("tpn,n->tp", mats, x)
            pt = np.sqrt(np.einsum("t,tp->p", mult, vals**2))
            out.append(float(np.dot(w, pt**p)) ** (1.0 / p))
        return np.array(out)

    K = len(blocks)
    if Z.shape[1] == 0:
        a = norms(x_part)
        return SolverReport(x_part, float(a.sum() ** p), True, 0, residual, 0.0,
                            {"rank": rank, "norms": a})

    # Projected blocks: values = mats @ (x_part + Z z)
    proj = [(np.einsum("tpn,nz->tpz", mats, Z), np.einsum("tpn,n->tp", mats, x_part), mult, w)
            for mats, mult, w in blocks]

    z = np.zeros(Z.shape[1])
    theta = np.full(K, 1.0 / K)
    prev = np.inf
    converged = False
    outer = 0
    for outer in range(1, max_outer + 1):
        z = _inner_solve(proj, theta, p, z)
        a = norms(x_part + Z @ z)
        value = float(a.sum() ** p)
        if a.sum() > 0:
            theta = np.maximum(a / a.sum(), 1e-300)
        if abs(prev - value) <= tol * max(value, 1e-300):
            converged = True
            break
        prev = value
    x = x_part + Z @ z
    a = norms(x)
    return SolverReport(x, float(a.sum() ** p), converged, outer, residual,
                        abs(prev - value) / max(value, 1e-300), {"rank": rank, "norms": a})


# |v|^p is replaced by (v^2 + eta)^{p/2}; the bias is at most eta^{p/2} per unit mass.
# eta must stay fixed within a solve or the line search compares different functions.
_SMOOTHING = 1e-20


def _inner_solve(proj, theta, p, z0, max_newton: int = 100):
    """Minimize sum_k theta_k^{1-p} sum_j w_j |v_kj(z)|^p by damped Newton."""
    coef = theta ** (1.0 - p)
    # flatten (T, P, Z) to (T*P, Z) so products go through BLAS
    flat = []
    for Mz, v0, mult, w in proj:
        T, P, Zd = Mz.shape
        flat.append((Mz.reshape(T * P, Zd), v0.reshape(T * P), np.repeat(mult, P), w, T, P))

    def evaluate(z, need_hess=True):
        val = 0.0
        g = np.zeros(z.size)
        H = np.zeros((z.size, z.size)) if need_hess else None
        for c, (M, v0, mult, w, T, P) in zip(coef, flat):
            vals = v0 + M @ z
            sq = (mult * vals**2).reshape(T, P).sum(axis=0)
            if p == 2.0:
                val += c * float(np.dot(w, sq))
                a1 = np.tile(2.0 * w, T)
                g += c * (M.T @ (a1 * mult * vals))
                if need_hess:
                    Mw = M * np.sqrt(a1 * mult)[:, None]
                    H += c * (Mw.T @ Mw)
                continue
            sqe = sq + _SMOOTHING
            val += c * float(np.dot(w, sqe ** (p / 2)))
            a1 = np.tile(w * p * sqe ** (p / 2 - 1), T)
            g += c * (M.T @ (a1 * mult * vals))
            if need_hess:
                Mw = M * np.sqrt(a1 * mult)[:, None]
                H += c * (Mw.T @ Mw)
                a2 = w * p * (p - 2) * sqe ** (p / 2 - 2)
                gp = ((mult * vals)[:, None] * M).reshape(T, P, -1).sum(axis=0)  # (P, Z)
                H += c * (gp.T * a2) @ gp
        return val, g, H

    z = z0.copy()
    val, g, H = evaluate(z)
    # Levenberg damping takes over when the weights make H too ill-conditioned
    # for a plain Newton step to pass the line search
    damp = 0.0
    scale = max(float(np.trace(H)) / max(H.shape[0], 1), 1e-300)
    for _ in range(max_newton):
        H = 0.5 * (H + H.T)
        reg = (1e-14 + damp) * scale
        try:
            dz = -_solve_spd(H + reg * np.eye(H.shape[0]), g)
        except np.linalg.LinAlgError:
            dz = -lstsq(H, g)[0]
        dec = -float(g @ dz)
        # below this the line search cannot resolve decrease through roundoff
        if dec <= 1e-13 * max(1.0, abs(val)):
            break
        step = 1.0
        accepted = False
        while step >= 1e-6:
            cand = z + step * dz
            cval = evaluate(cand, need_hess=False)[0]
            if cval <= val - 1e-4 * step * dec:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if damp >= 1e6:
                break
            damp = max(10.0 * damp, 1e-10)
            continue
        damp = damp / 10.0 if damp > 1e-10 else 0.0
        z = cand
        val, g, H = evaluate(z)
    return z
