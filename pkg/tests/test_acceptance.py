"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Every test prints a single ``criterion N: PASS|FAIL ...`` line to the terminal.
"""
import math
import time

import numpy as np
import pytest
from scipy.stats import kstest

from gausscap import cli
from gausscap.capacity import capacity, equivalence_ratio
from gausscap.hausdorff import gaussian_hausdorff
from gausscap.model_space import GaussModelSpace, HermiteExpansion
from gausscap.potential import SobolevParams, bessel_quadrature, bessel_spectral, meyer_envelope
from gausscap.regions import Full, ball, slab
from gausscap.semigroup import mehler_apply, spectral_apply
from gausscap.sheet import SheetGrid, kakutani_experiment, sample_sheets
from gausscap.truncation import truncation_sweep, multest_sweep


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")

    return emit


def _random_poly(space, rng):
    return HermiteExpansion(space, rng.standard_normal(space.dim) / (1.0 + space.orders))


def test_01_spectral_quadrature_agreement(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (1, 2):
        for K in (4, 8, 12):
            space = GaussModelSpace(n, K, K + 1)
            f = _random_poly(space, rng)
            x = rng.standard_normal((50, n))
            for r in (1.0, 2.0, 3.0):
                quad = bessel_quadrature(f, r, x, space.grid, laguerre_order=40)
                worst = max(worst, float(np.max(np.abs(quad - bessel_spectral(f, r)(x)))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 10
    report(1, ok, f"max |spectral - quadrature| = {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_02_semigroup_suite(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    space = GaussModelSpace(2, 6, 14)
    g = space.grid
    law = mehler = mass = 0.0
    negative = 0
    for _ in range(100):
        u = _random_poly(space, rng)
        s, t = rng.uniform(0.05, 2.0, 2)
        law = max(law, float(np.max(np.abs(
            spectral_apply(spectral_apply(u, s), t).coeffs - spectral_apply(u, s + t).coeffs))))
        x = rng.standard_normal((5, 2))
        mehler = max(mehler, float(np.max(np.abs(mehler_apply(u, t, x, g) - spectral_apply(u, t)(x)))))
        # a nonnegative polynomial of degree 6: the square of a cubic
        c = HermiteExpansion(GaussModelSpace(2, 3, 14), rng.standard_normal(10))
        sq = lambda z, c=c: c(z) ** 2
        vals = mehler_apply(sq, t, g.nodes, g)
        negative += int(np.sum(vals < 0))
        mass = max(mass, abs(g.integrate(vals) - g.integrate(sq(g.nodes))))
    elapsed = time.perf_counter() - t0
    ok = law < 1e-14 and mehler < 1e-8 and mass < 1e-8 and negative == 0 and elapsed < 30
    report(2, ok, f"law gap {law:.1e}, Mehler gap {mehler:.1e}, mass gap {mass:.1e}, "
                  f"negative values {negative}, {elapsed:.1f} s")
    assert ok


def test_03_full_space_capacity(report):
    t0 = time.perf_counter()
    errs = {}
    for n, K, Qs in ((1, 10, (16, 24, 32)), (2, 8, (12, 16))):
        for Q in Qs:
            space = GaussModelSpace(n, K, Q)
            for r in (1, 2):
                for p in (1.5, 2.0, 3.0):
                    for d in ("potential", "variational"):
                        res = capacity(Full(), SobolevParams(r, p), space, d)
                        key = (r, p)
                        errs[key] = max(errs.get(key, 0.0), abs(res.value - 1.0))
    elapsed = time.perf_counter() - t0
    ok = all(e < (1e-6 if p == 2.0 else 1e-3) for (r, p), e in errs.items()) and elapsed < 120
    worst = max(errs.values())
    report(3, ok, f"max |cap - 1| = {worst:.1e} over both definitions, {elapsed:.1f} s")
    assert ok


S2 = 1.0 / math.sqrt(2.0)
FAMILY = {
    1: [ball([0.0], 0.5), ball([0.0], 1.0), ball([0.0], 2.0), slab([1.0], 1.0, 0.5),
        slab([1.0], -0.5, 0.25), slab([1.0], 1.5, 1.0)],
    2: [ball([0.0, 0.0], 0.5), ball([0.0, 0.0], 1.0), ball([0.0, 0.0], 2.0), slab([1.0, 0.0], 0.0, 0.5),
        slab([S2, S2], 1.0, 0.5), slab([0.0, 1.0], 0.5, 1.0)],
}


@pytest.mark.slow
def test_04_equivalence(report):
    t0 = time.perf_counter()
    K, Q = 10, 16
    lines, ok = [], True
    for r in (1, 2):
        for p in (1.5, 2.0, 3.0):
            ratios, changes, converged = [], [], True
            params = SobolevParams(r, p)
            for n, fam in FAMILY.items():
                for region in fam:
                    a = equivalence_ratio(region, params, GaussModelSpace(n, K, Q))
                    b = equivalence_ratio(region, params, GaussModelSpace(n, K, Q + 8))
                    ratios += [a.ratio, b.ratio]
                    changes.append(abs(b.ratio / a.ratio - 1.0))
                    converged &= a.cap.converged and a.ccap.converged and b.cap.converged and b.ccap.converged
            C = max(max(ratios), 1.0 / min(ratios))
            good = converged and max(changes) < 0.10 and np.all(np.isfinite(ratios))
            ok &= bool(good)
            lines.append(f"(r={r}, p={p:g}): C = {C:.3f}, max change {max(changes):.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 15 * 60
    report(4, ok, "; ".join(lines) + f"; {elapsed:.0f} s")
    assert ok


@pytest.mark.slow
def test_05_truncation_dimension_independence(report):
    t0 = time.perf_counter()
    maxima, pooled = {}, []
    for n in (1, 2, 3, 4):
        ratios = [row.ratio for row in truncation_sweep(n, samples=100, seed=0)]
        maxima[n] = max(ratios)
        pooled += ratios
    m = np.array(list(maxima.values()))
    variation = (m.max() - m.min()) / m.min()
    over = m.max() / np.median(pooled)
    elapsed = time.perf_counter() - t0
    ok = bool(np.all(np.isfinite(m)) and variation < 0.15 and over <= 10 and elapsed < 600)
    report(5, ok, f"max ratio per n {np.round(m, 4).tolist()}, variation {variation:.3f}, "
                  f"max/median {over:.2f}, {elapsed:.0f} s")
    assert ok


def test_06_multiplicative_estimate(report):
    t0 = time.perf_counter()
    rows = multest_sweep(n=2, samples=500, seed=0)
    ratios = np.array([r.ratio for r in rows])
    bound = cli.MULTEST_BOUND_FACTOR * np.median(ratios)
    violations = int(np.sum(~np.isfinite(ratios) | (ratios > bound)))
    scaling = max(r.extra for r in rows)
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and scaling <= 1e-10 and elapsed < 300
    report(6, ok, f"violations {violations} (bound {bound:.3f}, max {ratios.max():.3f}), "
                  f"scaling gap {scaling:.1e}, {elapsed:.1f} s")
    assert ok


def test_07_meyer_envelope(report):
    t0 = time.perf_counter()
    lines, ok = [], True
    for r in (1, 2):
        for p in (2.0, 3.0):
            e = meyer_envelope(2, SobolevParams(r, p), samples=100, seed=0, K=6, extra=4)
            ok &= e.spread < 50 and e.drift < 0.10
            lines.append(f"(r={r}, p={p:g}): [{e.lower:.3f}, {e.upper:.3f}] drift {e.drift:.1e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    report(7, ok, "; ".join(lines) + f"; {elapsed:.1f} s")
    assert ok


def test_08_hausdorff_hyperplane(report):
    t0 = time.perf_counter()
    g0 = 1.0 / math.sqrt(2.0 * math.pi)
    v0 = gaussian_hausdorff(slab([1.0, 0.0], 0.0, 0.0), 1.0, n=2, seed=0).value
    v1 = gaussian_hausdorff(slab([1.0, 0.0], 1.0, 0.0), 1.0, n=2, seed=0).value
    e0, e1 = abs(v0 / g0 - 1), abs(v1 / (g0 * math.exp(-0.5)) - 1)
    elapsed = time.perf_counter() - t0
    ok = e0 < 0.05 and e1 < 0.05 and elapsed < 120
    report(8, ok, f"rho_1(x1=0) = {v0:.6f} (rel err {e0:.1e}), rho_1(x1=1) = {v1:.6f} "
                  f"(rel err {e1:.1e}), {elapsed:.1f} s")
    assert ok


def test_09_sheet_law(report):
    t0 = time.perf_counter()
    N = 100_000
    grid = SheetGrid.box(2, 1, upper=1.0, spacing=0.25)
    X = sample_sheets(grid, 0, range(N)).reshape(N, -1)
    pvals = np.array([kstest(X[:, j], "norm").pvalue for j in range(X.shape[1])])
    T = np.stack(np.meshgrid(*grid.axes, indexing="ij"), -1).reshape(-1, 2)
    C = np.exp(-np.abs(T[:, None, :] - T[None, :, :]).sum(-1))
    Xc = X - X.mean(axis=0)
    emp = Xc.T @ Xc / (N - 1)
    # standard error of a Gaussian sample covariance with unit variances
    z = np.abs(emp - C) / np.sqrt((1.0 + C**2) / N)
    elapsed = time.perf_counter() - t0
    ok = bool(np.all(pvals > 0.01) and z.max() < 3.0 and elapsed < 300)
    report(9, ok, f"min KS p-value {pvals.min():.3f} over {pvals.size} points, "
                  f"max covariance z {z.max():.2f} over {z.size} pairs, {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_10_kakutani_ordering(report):
    t0 = time.perf_counter()
    grid = SheetGrid.box(2, 1, upper=1.0, spacing=0.25)
    spaces = [GaussModelSpace(1, q - 1, q) for q in (81, 101, 121)]
    table = kakutani_experiment([ball([0.0], rho) for rho in (1.0, 0.5, 0.25)], grid, 10_000,
                                spaces, seed=0, capacity_margin=0.0)
    hits = [r.hit.estimate for r in table.rows]
    caps = [r.capacity for r in table.rows]
    elapsed = time.perf_counter() - t0
    ok = (hits[0] > hits[1] > hits[2] and caps[0] > caps[1] > caps[2]
          and table.rank_correlation == pytest.approx(1.0) and not table.flags and elapsed < 600)
    report(10, ok, f"hits {np.round(hits, 4).tolist()}, caps {np.round(caps, 4).tolist()}, "
                   f"rank correlation {table.rank_correlation:.3f}, flags {len(table.flags)}, "
                   f"{elapsed:.0f} s")
    assert ok


def test_11_selftest_determinism(report, tmp_path):
    codes, blobs = [], []
    for name in ("first", "second"):
        out = tmp_path / name
        codes.append(cli.main(["selftest", "--seed", "11", "--out", str(out), "--quiet"]))
        blobs.append((out / "selftest.json").read_bytes())
    ok = codes == [0, 0] and blobs[0] == blobs[1]
    report(11, ok, f"exit codes {codes}, identical result JSON: {blobs[0] == blobs[1]}")
    assert ok
