import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smolkin import kernel as K
from smolkin import mellin as ml
from smolkin import resolvent as R
from smolkin.errors import DomainError

S = 1.8


@pytest.fixture(scope="module")
def ctx():
    return K.make_context(S)


@given(st.floats(1e-3, 1e3))
def test_q_positive(w):
    assert K.q_weight(w, S) > 0


@given(st.floats(1e-3, 1.0))
def test_q_small_w_bound(w):
    assert K.q_weight(w, S) <= w ** (S - 2) / (S - 1)


def test_q_large_w_decay():
    w = np.geomspace(10.0, 1e3, 9)
    slope = np.polyfit(np.log(w), np.log(K.q_weight(w, S)), 1)[0]
    assert slope == pytest.approx(-(3 - S), abs=0.05)


@pytest.mark.parametrize("sigma", [1.75, 1.8, 1.9])
def test_normalization_matches_closed_form(sigma):
    cs, total = K.c_star(sigma, 1e-10)
    assert cs * total == pytest.approx(1.0, rel=1e-14)
    assert abs(ml.k_bar(sigma) * total - 1.0) < 1e-8


def test_q_domain():
    with pytest.raises(DomainError):
        K.q_weight(0.0, S)


def test_green_support_and_sign(ctx):
    V = np.array([0.1, 0.5, 0.99, 1.0, 1.5])
    g = K.green_g(V, 1.0, ctx)
    assert np.all(g[:3] > 0)
    assert np.all(g[3:] == 0)


@given(st.floats(0.05, 0.95), st.floats(0.2, 5.0))
def test_green_homogeneity(ctx, r, lam):
    lhs = K.green_g(lam * r, lam, ctx)
    rhs = lam ** (S - 8 / 3) * K.green_g(r, 1.0, ctx)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("V, eta", [(0.3, 1.7), (0.8, 1.05), (0.05, 3.0)])
def test_dirichlet_kernel_two_routes(ctx, V, eta):
    assert K.dirichlet_k(V, eta, 1.0, ctx) == pytest.approx(K.dirichlet_k_direct(V, eta, 1.0, ctx), rel=1e-9)


def test_dirichlet_kernel_scaling(ctx):
    assert 2.0 * K.dirichlet_k(0.6, 3.4, 2.0, ctx) == pytest.approx(K.dirichlet_k(0.3, 1.7, 1.0, ctx), rel=1e-12)


def test_dirichlet_kernel_small_volume_limit(ctx):
    lim = K.dirichlet_k_limit(1.7, 1.0, ctx)
    gaps = [K.dirichlet_k(v, 1.7, 1.0, ctx) - lim for v in (1e-3, 1e-4, 1e-5)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    rate = math.log10(gaps[1] / gaps[2])
    first = min(z.root for z in ml.find_zeros(S, 0) if z.family == 1)
    assert rate == pytest.approx(first, rel=0.1)


def test_bvp_constant_source_residual(ctx):
    prob = K.BVProblem(1.0, g=lambda x: np.ones_like(np.asarray(x, dtype=float)))
    sol = K.bvp_solve(prob, ctx, np.array([0.5]))
    r = R.apply_generator(sol, 0.5, R.GeneratorSpec.power(S))
    assert abs(-r - 1.0) < 1e-3
    assert sol.values[0] > 0


def test_bvp_exterior_data_gives_nonnegative_solution(ctx):
    prob = K.BVProblem(1.0, psi=lambda x: 1.0 / (1.0 + (np.asarray(x) - 1.0) ** 2), psi_limit=0.0)
    sol = K.bvp_solve(prob, ctx, np.linspace(0.1, 0.9, 5))
    assert np.all(sol.values >= 0)
    assert np.all(np.diff(sol.values) > 0)


def test_bvp_problem_validation():
    with pytest.raises(DomainError):
        K.BVProblem(0.0)
    with pytest.raises(DomainError):
        K.BVProblem(1.0, g=lambda x: np.full_like(np.asarray(x, dtype=float), np.nan))
