import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smolkin import mellin as ml
from smolkin.errors import DomainError, PoleError


@pytest.fixture(scope="module")
def structure():
    return ml.build_structure(1.8, 10)


@pytest.mark.parametrize("z", [-0.5, -1.0, -1.3 + 2.0j, -0.2 - 0.7j, -2.5 + 0.1j])
def test_symbol_matches_defining_integral(z):
    assert abs(ml.m_eval(z, 1.8) - ml.m_direct(z, 1.8)) < 1e-8 * max(1.0, abs(ml.m_eval(z, 1.8)))


def test_symbol_vanishes_at_zero_with_known_slope():
    h = 1e-6
    slope = (ml.m_eval(h, 1.8) - ml.m_eval(-h, 1.8)) / (2 * h)
    assert ml.m_eval(0.0, 1.8) == 0.0
    assert slope == pytest.approx(ml.m_prime_zero(1.8), rel=1e-8)


@given(st.floats(1.70, 1.98))
def test_kbar_closed_form(s):
    assert ml.k_bar(s) == pytest.approx((s - 1) * math.sin(math.pi * (s - 1)) / math.pi, rel=1e-15)


def test_symbol_poles_rejected():
    z = 1.8 - 1.0 - 1.0 / 3.0
    with pytest.raises(PoleError):
        ml.m_eval(z, 1.8)


def test_zero_table_shape(structure):
    assert len(structure.zeros) == 33
    assert sorted({z.family for z in structure.zeros}) == [0, 1, 2]
    assert [z.n for z in structure.zeros if z.family == 1] == list(range(11))


@pytest.mark.parametrize("sigma", [1.72, 1.8, 1.9, 1.97])
def test_zeros_are_zeros_and_interlace(sigma):
    zs = ml.find_zeros(sigma, 6)
    for z in zs:
        assert z.lo <= z.root <= z.hi
        if z.family:
            assert abs(ml.m_eval(z.root, sigma)) < 1e-10
    pole = {(j, n): z for j, n, z in ml.poles(sigma, 7)}
    by = {(z.family, z.n): z.root for z in zs}
    for n in range(7):
        assert pole[(2, n)] < by[(1, n)] < pole[(1, n)] < by[(2, n)] < pole[(2, n + 1)]


def test_asymptotic_zero_improves_with_n(structure):
    gaps = [abs(z.root - z.asymptotic) / (z.hi - z.lo) for z in structure.zeros if z.family == 1]
    assert gaps[10] < gaps[2] < 0.5
    assert gaps[10] < 0.1


@pytest.mark.parametrize("j, n", [(1, 0), (2, 0), (1, 5), (2, 7)])
def test_residue_matches_numerical_limit(j, n):
    z0 = 1.8 - 1.0 - j / 3.0 + n
    h = 1e-7
    num = 0.5 * (ml.analytic_factor(z0 + h, 1.8) * h - ml.analytic_factor(z0 - h, 1.8) * h)
    assert num == pytest.approx(ml.residue(1.8, j, n), rel=1e-5)


def test_contour_matches_residue_series(structure):
    V = np.array([1e-4, 0.02, 0.1, 0.5])
    np.testing.assert_allclose(ml.g_eval(V, None, structure), ml.g_residue_series(V, structure, 60), rtol=1e-10)


@pytest.mark.parametrize("angle", [math.pi / 6, math.pi / 3])
def test_contour_angle_independent(structure, angle):
    V = np.array([0.01, 0.3, 0.8, 0.97])
    base = ml.g_eval(V, None, structure)
    np.testing.assert_allclose(ml.g_eval(V, ml.ContourSpec(half_angle=angle), structure), base, rtol=1e-9)


def test_contour_vanishes_beyond_one(structure):
    assert abs(ml.g_eval(1.5, None, structure)) < 1e-12
    with pytest.raises(DomainError):
        ml.g_eval(1.0, None, structure)


def test_edge_value_and_approach_rate(structure):
    edge = ml.lambda_at_one(structure)
    assert edge == pytest.approx(1.0 / (structure.k_bar * structure.m_prime_zero))
    V = np.array([1e-7, 1e-8])
    gap = np.asarray(ml.g_eval(V, None, structure)) / structure.k_bar - edge
    rate = math.log(gap[0] / gap[1]) / math.log(10.0)
    first = min(z.root for z in structure.zeros if z.family == 1)
    assert rate == pytest.approx(first, abs=2e-3)


def test_contour_spec_validation():
    with pytest.raises(DomainError):
        ml.ContourSpec(vertex=0.5)
    with pytest.raises(DomainError):
        ml.ContourSpec(half_angle=2.0)
