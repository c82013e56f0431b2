import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sps

from smolkin import lambda_series as ls
from smolkin import mellin as ml
from smolkin.errors import DomainError, TailError
from smolkin.specfun import omega


@pytest.fixture(scope="module")
def series18():
    return ls.build(1.8, 200)


@pytest.mark.parametrize("l", [1, 2])
def test_taylor_matches_binomial(l):
    t = ls.f_taylor(l, 30)
    k = np.arange(31)
    c = 2.0 if l == 1 else 1.0
    ref = c * sps.poch(l / 3.0, k) / sps.factorial(k)
    np.testing.assert_allclose(t.coeffs, ref, rtol=1e-13)


def test_leading_coefficients(series18):
    assert series18.coeffs[0, 0] == 1.0
    expected = -2.0 * omega(1, 0, 0, 1.8) / omega(0, 1, 0, 1.8)
    assert series18.coeffs[0, 1] == pytest.approx(expected, rel=1e-14)


def test_growth_certificate_at_default_delta(series18):
    assert series18.growth_rate == pytest.approx(1.05)
    rows = np.abs(series18.coeffs).max(axis=1)
    assert np.all(rows <= series18.growth_constant * 1.05 ** np.arange(201) * (1 + 1e-12))


@pytest.mark.parametrize("sigma", [1.70, 1.75, 1.80, 1.90])
def test_error_bound_covers_actual_error(sigma):
    ser = ls.build(sigma)
    st_ = ml.build_structure(sigma, 0)
    xi = np.array([0.1, 0.3, 0.5, 0.7])
    exact = np.asarray(ml.g_eval(1 - xi, None, st_)) / st_.k_bar
    err = np.abs(ls._series_sum(ser, xi) / exact - 1)
    # the bound is relative to xi^(sigma-2) and Lambda <= xi^(sigma-2)
    assert np.all(err * exact <= ser.tail_bound(xi) * xi ** (sigma - 2) + 1e-15)


def test_slow_sigma_raises_tail_error():
    ser = ls.build(1.7)
    with pytest.raises(TailError):
        ls.eval_lambda(ser, 0.7)
    vals, from_series = ls.eval_profile(ser, np.array([0.1, 0.7]))
    assert from_series.tolist() == [True, False]
    assert np.all(vals > 0)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_domain(series18, bad):
    with pytest.raises(DomainError):
        ls.eval_lambda(series18, bad)


def test_build_rejects_heuristic_regime():
    with pytest.raises(DomainError):
        ls.build(2.5)


@given(st.floats(0.01, 0.89))
def test_bounds_and_remainder(series18, xi):
    lam = ls.eval_lambda(series18, xi)
    assert 0 < lam <= xi ** (-0.2)
    assert ls.h_eval(series18, xi) == pytest.approx(lam - xi ** (-0.2), abs=1e-12)


def test_vectorized_matches_scalar(series18):
    xi = np.array([0.05, 0.3, 0.6, 0.95])
    vec = ls.eval_lambda(series18, xi)
    assert vec.shape == xi.shape
    np.testing.assert_allclose(vec, [ls.eval_lambda(series18, x) for x in xi], rtol=1e-14)


@pytest.mark.parametrize("xi", [0.05, 0.4, 0.9])
def test_residual_small(series18, xi):
    assert abs(ls.residual(series18, xi)) <= 1e-4 * xi ** (-0.2)


def test_residual_detects_wrong_coefficients(series18):
    bad = ls.LambdaSeries(1.8, series18.order, series18.coeffs * np.r_[1.0, 1.01, 1.0][None, :], 0.05, 1.0, 1.0)
    assert abs(ls.residual(bad, 0.4)) > 1e-4
