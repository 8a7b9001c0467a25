import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpsscatter.numkit import (LUSolver, bary_weights, bessel_h1, bessel_h1p, cheb_diff_matrix,
                               cheb_nodes, gauss_legendre, lagrange_interp_matrix)


def _mp_gauss(q):
    """Nodes/weights refined in 40-digit arithmetic from numpy's starting values."""
    mpmath.mp.dps = 40
    nodes, weights = [], []
    for x0 in np.polynomial.legendre.leggauss(q)[0]:
        x = mpmath.findroot(lambda t: mpmath.legendre(q, t), mpmath.mpf(x0))
        dp = mpmath.diff(lambda t: mpmath.legendre(q, t), x)
        nodes.append(float(x))
        weights.append(float(2 / ((1 - x * x) * dp * dp)))
    mpmath.mp.dps = 15
    return np.array(nodes), np.array(weights)


@pytest.mark.parametrize("q", [1, 2, 5, 10, 14, 16, 40])
def test_gauss_legendre_matches_high_precision(q):
    x, w = _mp_gauss(q)
    rule = gauss_legendre(q)
    assert np.max(np.abs(rule.nodes - x)) <= 2e-16
    assert np.max(np.abs(rule.weights - w)) <= 4e-16


@settings(max_examples=30, deadline=None)
@given(q=st.integers(1, 30), data=st.data())
def test_gauss_legendre_exact_for_degree_2q_minus_1(q, data):
    deg = data.draw(st.integers(0, 2 * q - 1))
    rule = gauss_legendre(q)
    exact = (1 - (-1) ** (deg + 1)) / (deg + 1)
    assert abs(rule.weights @ rule.nodes ** deg - exact) < 1e-13


def test_gauss_legendre_rejects_bad_order():
    with pytest.raises(ValueError):
        gauss_legendre(0)


def test_scaled_rule_integrates_on_interval():
    r = gauss_legendre(10).scaled(0.2, 1.7)
    assert abs(r.weights @ np.exp(r.nodes) - (np.exp(1.7) - np.exp(0.2))) < 1e-14


def test_cheb_nodes_decreasing_with_endpoints():
    x = cheb_nodes(16)
    assert x[0] == 1.0 and x[-1] == -1.0
    assert np.all(np.diff(x) < 0)


@pytest.mark.parametrize("h", [1.0, 0.125])
def test_cheb_diff_exact_on_polynomials(h):
    p = 16
    D = cheb_diff_matrix(p, h)
    t = cheb_nodes(p) * h
    for k in range(p):
        f, df = t ** k, k * t ** max(k - 1, 0)
        assert np.max(np.abs(D @ f - df)) < 1e-9 * max(1.0, np.max(np.abs(df)))
    assert np.allclose(D.sum(axis=1), 0.0, atol=1e-12 / h)


def test_bary_weights_reject_duplicates():
    with pytest.raises(ValueError):
        bary_weights([0.0, 0.5, 0.5])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=20))
def test_lagrange_interp_reproduces_polynomials(targets):
    src = gauss_legendre(12).nodes
    L = lagrange_interp_matrix(src, targets)
    poly = lambda s: 3 * s ** 11 - s ** 4 + 0.5  # noqa: E731
    assert np.max(np.abs(L @ poly(src) - poly(np.asarray(targets)))) < 1e-12


def test_lagrange_interp_exact_at_nodes():
    src = cheb_nodes(9)
    L = lagrange_interp_matrix(src, src[[0, 3, 8]])
    assert np.array_equal(L, np.eye(9)[[0, 3, 8]])


def _mp_h1(l, x):
    return complex(mpmath.hankel1(l, x))


@pytest.mark.parametrize("l,x", [(0, 1e-6), (0, 0.3), (1, 2.5), (5, 10.0), (30, 20.0), (30, 44.7), (2, 300.0)])
def test_hankel_against_mpmath(l, x):
    ref = _mp_h1(l, x)
    assert abs(bessel_h1(l, x) - ref) <= 1e-13 * abs(ref)
    dref = complex(mpmath.diff(lambda t: mpmath.hankel1(l, t), x))
    assert abs(bessel_h1p(l, x) - dref) <= 1e-11 * abs(dref)


def test_hankel_rejects_nonpositive_argument():
    with pytest.raises(ValueError):
        bessel_h1(0, 0.0)


def test_lu_solver_and_condition_estimate(rng):
    A = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
    b = rng.standard_normal(40)
    lu = LUSolver(A)
    assert np.allclose(A @ lu.solve(b), b, atol=1e-12)
    exact = np.linalg.cond(A, 1)
    est = lu.cond_estimate()
    assert exact / 10 <= est <= exact * 1.0001
