import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gausscap.model_space import (
    MAX_QUAD_ORDER,
    GaussModelSpace,
    HermiteExpansion,
    build_grid,
    expand,
    graded_lex_indices,
    hermite_eval,
)


def test_hermite_values():
    assert hermite_eval(0, 3.7) == 1.0
    assert hermite_eval(1, 2.0) == 2.0
    assert hermite_eval(2, 1.0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        hermite_eval(-1, 0.0)


def test_hermite_recurrence_matches_closed_form():
    x = np.linspace(-3, 3, 13)
    assert np.allclose(hermite_eval(3, x), (x**3 - 3 * x) / math.sqrt(6))
    assert np.allclose(hermite_eval(4, x), (x**4 - 6 * x**2 + 3) / math.sqrt(24))


def test_small_rules():
    g = build_grid(GaussModelSpace(1, 0, 1))
    assert np.allclose(g.nodes, [[0.0]]) and np.allclose(g.weights, [1.0])
    g = build_grid(GaussModelSpace(1, 1, 2))
    assert np.allclose(np.sort(g.nodes[:, 0]), [-1, 1]) and np.allclose(g.weights, 0.5)
    assert g.integrate(g.nodes[:, 0] ** 2) == pytest.approx(1.0, abs=1e-14)
    g = build_grid(GaussModelSpace(2, 1, 2))
    assert g.size == 4 and np.allclose(np.abs(g.nodes), 1) and np.allclose(g.weights, 0.25)


@pytest.mark.parametrize("Q", [1, 5, 16, 40, 81, 150, MAX_QUAD_ORDER])
def test_moments(Q):
    g = GaussModelSpace(1, 0, Q).grid
    x = g.nodes[:, 0]
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(g.weights > 0)
    assert g.integrate(x) == pytest.approx(0.0, abs=1e-10)
    if Q > 1:
        assert g.integrate(x**2) == pytest.approx(1.0, abs=1e-10)


def test_too_many_nodes_is_rejected():
    with pytest.raises(ValueError):
        GaussModelSpace(1, 0, MAX_QUAD_ORDER + 1).grid


def test_polynomial_exactness():
    Q = 6
    g = GaussModelSpace(1, 0, Q).grid
    x = g.nodes[:, 0]
    # E x^{2j} = (2j - 1)!!
    for j in range(Q):
        assert g.integrate(x ** (2 * j)) == pytest.approx(float(np.prod(np.arange(1, 2 * j, 2))), rel=1e-11)


def test_invalid_spaces():
    with pytest.raises(ValueError):
        GaussModelSpace(0, 2)
    with pytest.raises(ValueError):
        GaussModelSpace(1, -1)
    with pytest.raises(ValueError):
        GaussModelSpace(1, 4, 4)


def test_graded_lex_order():
    idx = graded_lex_indices(2, 2)
    assert [tuple(a) for a in idx] == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)] or \
        [tuple(a) for a in idx] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert list(idx.sum(axis=1)) == sorted(idx.sum(axis=1))
    assert len(graded_lex_indices(4, 6)) == math.comb(10, 4)


@pytest.mark.parametrize("n,K", [(1, 8), (2, 6), (3, 3)])
def test_orthonormality(n, K):
    s = GaussModelSpace(n, K, K + 1)
    B = s.basis(s.grid.nodes)
    gram = B.T @ (s.grid.weights[:, None] * B)
    assert np.max(np.abs(gram - np.eye(s.dim))) < 1e-10


def test_expand_examples():
    s = GaussModelSpace(1, 4)
    one = expand(lambda x: np.ones(len(x)), s)
    assert one.coeff([0]) == pytest.approx(1.0) and np.allclose(one.coeffs[1:], 0, atol=1e-13)
    lin = expand(lambda x: x[:, 0], s)
    assert lin.coeff([1]) == pytest.approx(1.0) and lin.coeff([0]) == pytest.approx(0, abs=1e-14)
    sq = expand(lambda x: x[:, 0] ** 2, s)
    assert sq.coeff([0]) == pytest.approx(1.0) and sq.coeff([2]) == pytest.approx(math.sqrt(2))
    assert one(0.3) == pytest.approx(1.0)
    assert lin(0.5) == pytest.approx(0.5)
    assert sq(2.0) == pytest.approx(4.0)
    assert sq.coeff([7]) == 0.0


def test_eval_dimension_mismatch():
    u = GaussModelSpace(2, 2).constant()
    with pytest.raises(ValueError):
        u(np.zeros(3))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=10, max_size=10))
def test_parseval_and_round_trip(c):
    s = GaussModelSpace(3, 2, 3)
    u = HermiteExpansion(s, np.array(c))
    vals = u.nodal()
    assert np.sum(u.coeffs**2) == pytest.approx(s.grid.integrate(vals**2), rel=1e-10, abs=1e-12)
    assert np.allclose(expand(vals, s).coeffs, u.coeffs, atol=1e-10)


def test_json_round_trip():
    rng = np.random.default_rng(3)
    s = GaussModelSpace(2, 3)
    u = HermiteExpansion(s, rng.standard_normal(s.dim))
    v = HermiteExpansion.from_json(u.to_json())
    assert np.array_equal(u.coeffs, v.coeffs)
    assert u.to_json() == v.to_json()


def test_expansion_is_immutable():
    u = GaussModelSpace(1, 2).constant()
    with pytest.raises(ValueError):
        u.coeffs[0] = 2.0
