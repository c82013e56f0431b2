import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from smolkin import resolvent as R
from smolkin import simulator as S
from smolkin.acceptance import random_smooth
from smolkin.errors import DomainError

NODES = R.geometric_nodes(1e-4, 10.0, 200)


@pytest.fixture(scope="module")
def reg():
    spec = R.GeneratorSpec.regularized(1.8, 1e-3)
    return spec, R.generator_matrix(NODES, spec)


def test_grid_function_contract():
    g = R.GridFunction.from_function(np.sqrt, NODES)
    assert g(20.0) == g.tail_value == pytest.approx(np.sqrt(10.0))
    assert g(0.5 * (NODES[3] + NODES[4])) == pytest.approx(0.5 * (g.values[3] + g.values[4]))
    with pytest.raises(DomainError):
        R.GridFunction(np.array([0.0, 1.0]), np.array([1.0, 2.0]), 3.0)
    with pytest.raises(DomainError):
        R.GridFunction(np.array([1.0, 0.5]), np.array([1.0, 1.0]), 1.0)


def test_matrix_structure(reg):
    _, A = reg
    assert np.all(A >= 0)
    assert np.all(np.tril(A) == 0)
    assert np.all(A[-1] == 0)


def test_row_sums_equal_total_jump_rate():
    law = S.truncated_power(2.5, 1.0)
    nodes = np.linspace(0.0, 50.0, 201)
    A = R.generator_matrix(nodes, R.GeneratorSpec.from_law(law))
    for i in (0, 40, 150):
        assert A[i].sum() == pytest.approx(S.total_rate(nodes[i], law), rel=1e-10)


def test_apply_generator_matches_matrix(reg):
    spec, A = reg
    g = R.GridFunction.from_function(lambda x: np.exp(-x), NODES)
    idx = [5, 60, 150]
    direct = R.apply_generator(g, NODES[idx], spec)
    mat = (A @ g.values - A.sum(1) * g.values)[idx]
    np.testing.assert_allclose(direct, mat, rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("c", [0.0, -2.5, 0.7321, 1e6])
def test_constants_fixed_exactly(reg, c):
    spec, A = reg
    g = R.GridFunction(NODES, np.full(len(NODES), c), c)
    assert np.all(R.resolvent_solve(g, 1.3, spec, A).values == c)


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 20.0))
def test_markov_bounds(reg, seed, lam):
    spec, A = reg
    g = R.GridFunction.from_function(random_smooth(np.random.default_rng(seed)), NODES)
    phi = R.resolvent_solve(g, lam, spec, A)
    assert phi.values.max() <= g.values.max() + 1e-14
    assert phi.values.min() >= g.values.min() - 1e-14
    assert phi(np.array([10.0, 11.0, 1e9])).tolist() == [g.tail_value] * 3


def test_resolvent_equation_holds(reg):
    spec, A = reg
    g = R.GridFunction.from_function(lambda x: np.cos(x), NODES)
    phi = R.resolvent_solve(g, 0.8, spec, A)
    omega = A @ phi.values - A.sum(1) * phi.values
    np.testing.assert_allclose(phi.values - 0.8 * omega, g.values, atol=1e-11)


def test_pregenerator_check_passes(reg):
    spec, _ = reg
    rng = np.random.default_rng(3)
    samples = [R.GridFunction.from_function(random_smooth(rng), NODES) for _ in range(5)]
    rep = R.pregenerator_check(spec, samples)
    assert rep.ok and rep.samples == 5
    assert rep.omega_one_max == 0.0


def test_richardson_removes_linear_error():
    exact = np.array([1.0, 2.0])
    eps = [4e-3, 2e-3, 1e-3]
    vals = [exact + 3.0 * e for e in eps]
    np.testing.assert_allclose(R.extrapolate_epsilon(vals, eps, 1.0), exact, rtol=1e-12)


def test_adjoint_matches_matrix_exponential():
    law = S.truncated_power(2.5, 5.0)
    nodes = np.linspace(0.0, 100.0, 81)
    spec = R.GeneratorSpec.from_law(law)
    A = R.generator_matrix(nodes, spec)
    L = A - np.diag(A.sum(1))
    phi0 = R.GridFunction.from_function(lambda v: np.minimum(v, 100.0) / 100.0, nodes)
    ref = expm(2.0 * L) @ phi0.values
    errs = []
    for safety in (0.4, 0.2, 0.1):
        out = R.adjoint_evolve(phi0, [0.0, 2.0], spec, safety=safety)
        assert np.array_equal(out[0].values, phi0.values)
        errs.append(np.abs(out[1].values - ref).max())
    assert errs[-1] < 1e-6
    # third-order time stepping
    assert errs[0] / errs[1] > 6 and errs[1] / errs[2] > 6


def test_adjoint_preserves_order_and_constants():
    law = S.shifted_power(2.5)
    nodes = np.linspace(0.0, 30.0, 61)
    spec = R.GeneratorSpec.from_law(law)
    one = R.GridFunction(nodes, np.ones(61), 1.0)
    assert np.all(R.adjoint_evolve(one, [3.0], spec)[0].values == 1.0)
    up = R.GridFunction.from_function(lambda v: np.minimum(v, 30.0) / 30.0, nodes)
    phi = R.adjoint_evolve(up, [3.0], spec)[0].values
    assert np.all(np.diff(phi) >= -1e-14)
    assert np.all(phi >= up.values - 1e-14)


def test_spec_validation():
    with pytest.raises(DomainError):
        R.adjoint_evolve(R.GridFunction(NODES, np.ones(len(NODES)), 1.0), [1.0], R.GeneratorSpec.power(1.8))
    with pytest.raises(DomainError):
        R.GeneratorSpec.rescaled(0.5, S.shifted_power(1.9))
    with pytest.raises(DomainError):
        R.resolvent_solve(R.GridFunction(NODES, np.ones(len(NODES)), 1.0), 0.0, R.GeneratorSpec.power(1.8))
