import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sps

from smolkin.errors import DomainError, PoleError, QuadratureError
from smolkin.specfun import (
    QuadratureSpec,
    SigmaParams,
    as_params,
    beta,
    gamma,
    integrate_singular,
    loggamma,
    omega,
    phi,
    rgamma,
)


@pytest.mark.parametrize("sigma, regime", [(1.7, "core"), (1.99, "core"), (2.5, "heuristic"), (7 / 3, "heuristic")])
def test_regime(sigma, regime):
    assert as_params(sigma).regime == regime


@pytest.mark.parametrize("bad", [5 / 3, 1.5, 2.0, float("nan"), float("inf")])
def test_regime_gate_rejects(bad):
    with pytest.raises(DomainError):
        SigmaParams(bad)


def test_mu():
    assert SigmaParams(1.9).mu == pytest.approx(30 / 7, rel=1e-14)
    with pytest.raises(DomainError):
        SigmaParams(2.5).mu


@given(st.floats(0.05, 40.0))
def test_gamma_real_matches_scipy(x):
    assert gamma(x) == pytest.approx(sps.gamma(x), rel=1e-13)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_loggamma_complex_matches_scipy(re, im):
    z = complex(re, im)
    if abs(im) < 1e-3 and re <= 0 and abs(re - round(re)) < 1e-3:
        return
    ours = loggamma(z)
    ref = sps.loggamma(z)
    assert abs(np.exp(ours - ref) - 1) < 1e-11


@pytest.mark.parametrize("n", [0, -1, -2, -7])
def test_gamma_poles(n):
    with pytest.raises(PoleError):
        gamma(float(n))
    assert rgamma(float(n)) == 0.0


@given(st.floats(0.01, 0.99))
def test_reflection(x):
    assert gamma(x) * gamma(1 - x) == pytest.approx(math.pi / math.sin(math.pi * x), rel=1e-12)


@given(st.floats(0.05, 10), st.floats(0.05, 10))
def test_beta_matches_scipy(a, b):
    assert beta(a, b) == pytest.approx(sps.beta(a, b), rel=1e-11)


@pytest.mark.parametrize("sigma", [1.70, 1.75, 1.80, 1.85, 1.90, 1.95])
def test_phi_closed_form(sigma):
    assert abs((sigma - 1.0) * phi(sigma - 1.0, sigma - 2.0) - 1.0) < 1e-10


def test_omega_zero_entry_and_sign():
    assert omega(0, 0, 0, 1.8) == 0.0
    assert omega(0, 1, 0, 1.8) > 0
    with pytest.raises(DomainError):
        omega(3, 0, 0, 1.8)


@pytest.mark.parametrize("p", [0.0, 0.3, 0.7, 0.95])
def test_endpoint_singularity(p):
    spec = QuadratureSpec(left_exponent=p, abs_tol=1e-13, rel_tol=1e-12)
    res = integrate_singular(lambda x: x ** (-p), 0.0, 1.0, spec)
    assert res.value == pytest.approx(1.0 / (1.0 - p), rel=1e-9)


def test_both_endpoints_and_beta_oracle():
    a, b = 0.2, 0.45
    # 1 - x is only accurate to about 1e-16 absolutely, so ask for 1e-10
    spec = QuadratureSpec(left_exponent=1 - a, right_exponent=1 - b, rel_tol=1e-10, abs_tol=1e-14)
    res = integrate_singular(lambda x: x ** (a - 1) * (1 - x) ** (b - 1), 0.0, 1.0, spec)
    assert res.value == pytest.approx(sps.beta(a, b), rel=1e-9)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.3])
def test_infinite_tail(q):
    spec = QuadratureSpec(tail_exponent=q, rel_tol=1e-11, abs_tol=1e-14)
    res = integrate_singular(lambda x: (1 + x) ** (-q), 0.0, np.inf, spec)
    assert res.value == pytest.approx(1.0 / (q - 1.0), rel=1e-8)


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(left_exponent=1.0)
    with pytest.raises(DomainError):
        QuadratureSpec(tail_exponent=1.0)
    with pytest.raises(DomainError):
        QuadratureSpec(abs_tol=0.0)


def test_quadrature_reports_failure():
    spec = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=3)
    with pytest.raises(QuadratureError) as info:
        integrate_singular(lambda x: np.sin(200 * x) ** 2, 0.0, 10.0, spec)
    assert info.value.error > 0
