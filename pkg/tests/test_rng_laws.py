import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from smolkin import rng
from smolkin.errors import DomainError
from smolkin.laws import shifted_power, tabulated, truncated_power


@pytest.mark.parametrize("k0, k1", [(0, 0), (12345, 678), (2**64 - 1, 2**63 + 5)])
def test_philox_matches_numpy(k0, k1):
    bg = np.random.Philox(key=np.array([k0, k1], dtype=np.uint64))
    raw = bg.random_raw(40).reshape(10, 4)
    np.testing.assert_array_equal(rng.philox_blocks(k0, k1, np.arange(10)), raw)
    np.testing.assert_array_equal(rng.philox_blocks(k0, k1, 7), raw[7])


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**40))
def test_scalar_and_vector_paths_agree(key, ctr):
    vec = rng.philox_blocks(np.array([key, key], dtype=np.uint64), 3, np.array([ctr, ctr + 1], dtype=np.uint64))
    assert np.array_equal(vec[0], rng.philox_blocks(key, 3, ctr))
    assert np.array_equal(vec[1], rng.philox_blocks(key, 3, ctr + 1))


def test_uniforms_open_interval_and_uniform():
    u = rng.uniforms(np.uint64(9), np.uint64(0), np.arange(50_000, dtype=np.uint64)).ravel()
    assert u.min() > 0 and u.max() < 1
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_derive_seed_deterministic_and_distinct():
    a = rng.derive_seed(5, np.arange(1000, dtype=np.uint64))
    assert np.array_equal(a, rng.derive_seed(5, np.arange(1000, dtype=np.uint64)))
    assert len(np.unique(a)) == 1000
    assert rng.derive_seed(5, 3) == int(a[3])
    assert rng.derive_seed(6, 3) != int(a[3])


LAWS = {
    "shifted": shifted_power(1.9),
    "truncated": truncated_power(1.9, 0.5),
    "tabulated": tabulated(1.9, np.linspace(0.0, 4.0, 9), np.r_[np.linspace(0.3, 0.1, 8), 4.0**-1.9]),
}


def _quad(law, p, lo, hi):
    pts = [b for b in law.breakpoints if lo < b < hi] if np.isfinite(hi) else None
    f = lambda v: law.density(v) * v**p  # noqa: E731
    if np.isfinite(hi):
        return integrate.quad(f, lo, hi, points=pts, limit=400, epsabs=0, epsrel=1e-11)[0]
    mid = max(lo, 10.0)
    head = integrate.quad(f, lo, mid, points=[b for b in law.breakpoints if lo < b < mid] or None,
                          limit=400, epsabs=0, epsrel=1e-11)[0] if mid > lo else 0.0
    return head + integrate.quad(f, mid, np.inf, limit=400, epsabs=0, epsrel=1e-11)[0]


@pytest.mark.parametrize("name", list(LAWS))
@pytest.mark.parametrize("p", [0.0, 1 / 3, 2 / 3])
def test_moments_against_quadrature(name, p):
    law = LAWS[name]
    assert law.moment(p) == pytest.approx(_quad(law, p, 0.0, np.inf), rel=1e-8)
    for c in (0.3, 2.0, 50.0):
        assert law.upper_moment(p, c) == pytest.approx(_quad(law, p, c, np.inf), rel=1e-8)
        assert law.lower_moment(p, c) == pytest.approx(_quad(law, p, 0.0, c), rel=1e-8)


@pytest.mark.parametrize("sigma", [1.8, 2.0, 2.5, 7 / 3])
def test_shifted_moments_far_out(sigma):
    law = shifted_power(sigma)
    c = 1e40
    # the tail integral behaves like c^(p+1-sigma)/(sigma-p-1) for large c
    p = 1 / 3
    assert law.upper_moment(p, c) == pytest.approx(c ** (p + 1 - sigma) / (sigma - p - 1), rel=1e-10)
    assert np.isfinite(law.lower_moment(1.0, c))


def test_law_validation():
    with pytest.raises(DomainError):
        shifted_power(5 / 3)
    with pytest.raises(DomainError):
        truncated_power(1.9, 0.0)
    with pytest.raises(DomainError):
        tabulated(1.9, [0.0, 1.0], [1.0, 0.5])
    with pytest.raises(DomainError):
        LAWS["shifted"].moment(0.95)


def _conditional_draws(law, j, c, n, seed=1):
    def draw(attempt, idx):
        u = rng.uniforms(np.uint64(seed), np.uint64(j), np.asarray(idx, dtype=np.uint64), attempt)
        return u[:, 0], u[:, 1]

    return law.sample_above(j, np.full(n, c), draw)


@pytest.mark.parametrize("name", list(LAWS))
@pytest.mark.parametrize("j", [0, 1, 2])
def test_conditional_sampler_matches_law(name, j):
    law, c = LAWS[name], 0.2
    x = _conditional_draws(law, j, c, 20_000)
    assert np.all(x >= c)
    top = law.upper_moment(j / 3, c)
    cdf = lambda v: 1.0 - law.upper_moment(j / 3, np.maximum(v, c)) / top  # noqa: E731
    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_scatterer_tail_exponent():
    law = LAWS["shifted"]
    x = _conditional_draws(law, 0, 0.0, 200_000, seed=4)
    # survival ~ v^-(sigma-1): fit on the far tail
    grid = np.geomspace(50, 5000, 12)
    surv = np.array([(x > g).mean() for g in grid])
    slope = np.polyfit(np.log(grid), np.log(surv), 1)[0]
    assert slope == pytest.approx(-(law.sigma - 1), abs=0.05)
