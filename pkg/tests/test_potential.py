import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gausscap.model_space import GaussModelSpace, HermiteExpansion, expand, hermite_eval
from gausscap.potential import (
    SobolevParams,
    bessel_quadrature,
    bessel_spectral,
    derivative_tensor,
    dk_hs_norm,
    h_derivative,
    hs_bound_check,
    lp_norm,
    meyer_envelope,
    meyer_ratio,
    sobolev_norm,
)

S1 = GaussModelSpace(1, 6, 20)


def test_params_validation():
    with pytest.raises(ValueError):
        SobolevParams(0, 2)
    with pytest.raises(ValueError):
        SobolevParams(1, 1.0)


def test_bessel_spectral_examples():
    assert bessel_spectral(S1.constant(), 3.0).coeff([0]) == 1.0
    assert bessel_spectral(S1.monomial([1]), 2.0).coeff([1]) == pytest.approx(0.5)
    assert bessel_spectral(S1.monomial([2]), 4.0).coeff([2]) == pytest.approx(1 / 9)
    with pytest.raises(ValueError):
        bessel_spectral(S1.constant(), 0.0)


def test_bessel_quadrature_examples():
    g = S1.grid
    assert bessel_quadrature(lambda x: np.ones(len(x)), 1.5, 0.2, g) == pytest.approx(1.0, abs=1e-12)
    assert bessel_quadrature(lambda x: x[:, 0], 2.0, 1.0, g) == pytest.approx(0.5, abs=1e-8)
    x = np.array([[-1.3], [0.4], [2.2]])
    h2 = lambda z: hermite_eval(2, z[:, 0])
    assert np.allclose(bessel_quadrature(h2, 1.0, x, g), hermite_eval(2, x[:, 0]) / math.sqrt(3), atol=1e-8)
    with pytest.raises(ValueError):
        bessel_quadrature(h2, 1.0, x, g, laguerre_order=0)


def test_potential_semigroup_and_contraction():
    s = GaussModelSpace(2, 5, 8)
    rng = np.random.default_rng(4)
    u = HermiteExpansion(s, rng.standard_normal(s.dim))
    a = bessel_spectral(bessel_spectral(u, 1.0), 1.5).coeffs
    assert np.max(np.abs(a - bessel_spectral(u, 2.5).coeffs)) < 1e-15
    for p in (1.5, 2.0, 3.0):
        assert lp_norm(bessel_spectral(u, 2.0).nodal(), s.grid, p) <= lp_norm(u.nodal(), s.grid, p) * (1 + 1e-12)


def test_isometry_shift():
    s = GaussModelSpace(2, 5)
    u = HermiteExpansion(s, np.random.default_rng(5).standard_normal(s.dim))
    lift = lambda v, order: (1 + s.orders) ** (order / 2) * v.coeffs
    assert np.allclose(lift(bessel_spectral(u, 2.0), 3.0), lift(u, 1.0))


def test_positivity_of_potentials():
    s = GaussModelSpace(1, 8, 16)
    f = lambda z: np.maximum(z[:, 0], 0.0) ** 2
    vals = bessel_quadrature(f, 2.0, s.grid.nodes, s.grid)
    assert np.all(vals >= 0)


def test_h_derivative_examples():
    assert np.allclose(h_derivative(S1.constant(), 1).coeffs, 0)
    d = h_derivative(S1.monomial([1]), 1)
    assert d.coeff([0]) == pytest.approx(1.0)
    d = h_derivative(S1.monomial([2]), 1)
    assert d.coeff([1]) == pytest.approx(math.sqrt(2))
    x, e = 0.37, 1e-5
    h2 = lambda z: hermite_eval(2, z)
    assert d(x) == pytest.approx((h2(x + e) - h2(x - e)) / (2 * e), rel=1e-8)
    with pytest.raises(ValueError):
        h_derivative(S1.constant(), 2)


def test_dk_hs_norm_examples():
    assert dk_hs_norm(S1.constant(), 1, 0.3) == 0.0
    assert dk_hs_norm(S1.monomial([1]), 1, -2.0) == pytest.approx(1.0)
    s = GaussModelSpace(2, 2)
    u = s.monomial([1, 1])  # h_1(x1) h_1(x2) = x1 x2
    for x in ([0.0, 0.0], [1.2, -0.7]):
        assert dk_hs_norm(u, 2, x) == pytest.approx(math.sqrt(2))


def test_derivative_tensor_symmetry():
    s = GaussModelSpace(3, 4)
    u = HermiteExpansion(s, np.random.default_rng(6).standard_normal(s.dim))
    t = derivative_tensor(u, 2, [0.1, -0.5, 0.9])
    assert t.is_symmetric()
    assert np.allclose(t.entries, t.entries.T)


def test_sobolev_norm_examples():
    for r, p in [(1, 2), (2, 3), (3, 1.5)]:
        assert sobolev_norm(S1.constant(-2.5), SobolevParams(r, p)) == pytest.approx(2.5)
    assert sobolev_norm(S1.monomial([1]), SobolevParams(1, 2)) == pytest.approx(2.0)
    assert sobolev_norm(S1.monomial([1]), SobolevParams(2, 2)) == pytest.approx(2.0)


def test_meyer_examples():
    assert meyer_ratio(S1.constant(), SobolevParams(2, 3)) == pytest.approx(1.0)
    assert meyer_ratio(S1.monomial([1]), SobolevParams(1, 2)) == pytest.approx(math.sqrt(2) / 2)
    with pytest.raises(ValueError):
        meyer_ratio(S1.constant(0.0), SobolevParams(1, 2))


def test_meyer_envelope_is_narrow():
    e = meyer_envelope(1, SobolevParams(2, 3), samples=40, seed=1)
    assert 0 < e.lower <= e.upper
    assert e.spread < 50
    assert e.drift < 0.1


def test_hs_bound_examples():
    rep = hs_bound_check(np.array([0.6, 0.8]), trials=20)
    assert rep.norm == pytest.approx(1.0) and rep.sup_estimate == pytest.approx(1.0) and rep.holds
    rep = hs_bound_check(np.eye(2), trials=50)
    assert rep.norm == pytest.approx(math.sqrt(2)) and rep.sup_estimate == pytest.approx(1.0)
    assert rep.bound == pytest.approx(8.0) and rep.holds
    e1 = np.zeros((3, 3))
    e1[0, 0] = 1
    rep = hs_bound_check(e1, trials=50)
    assert rep.norm == pytest.approx(1.0) and rep.sup_estimate == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        hs_bound_check(np.array([[0, 1], [0, 0.0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(0, 10_000))
def test_hs_bound_holds_for_random_tensors(k, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3,) * k)
    if k == 2:
        A = A + A.T
    assert hs_bound_check(A, trials=100, refine_steps=10, seed=seed).holds


def test_spectral_matches_quadrature_2d():
    s = GaussModelSpace(2, 6, 7)
    rng = np.random.default_rng(8)
    f = HermiteExpansion(s, rng.standard_normal(s.dim))
    x = rng.standard_normal((15, 2))
    for r in (1.0, 2.0, 3.0):
        assert np.max(np.abs(bessel_quadrature(f, r, x, s.grid) - bessel_spectral(f, r)(x))) < 1e-8
