import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from smolkin import simulator as S
from smolkin.errors import DomainError, EventCapError

LAW = S.shifted_power(1.9)


def test_total_rate_formula():
    V = 8.0
    expected = 4.0 * LAW.moment(0) + 2 * 2.0 * LAW.moment(1 / 3) + LAW.moment(2 / 3)
    assert S.total_rate(V, LAW) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(DomainError):
        S.total_rate(-1.0, LAW)


@pytest.mark.parametrize("V", [0.0, 1.0, 50.0])
def test_jump_sizes_follow_rate_density(V):
    x = S.sample_jump(V, LAW, stream=11, size=20_000)
    cb = np.cbrt(V)

    def cdf(v):
        up = sum(S.C[j] * cb ** (2 - j) * LAW.upper_moment(j / 3, v) for j in range(3))
        return 1.0 - up / S.total_rate(V, LAW)

    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_jump_tail_exponent_at_unit_volume():
    x = S.sample_jump(1.0, LAW, stream=5, size=200_000)
    grid = np.geomspace(200, 20_000, 10)
    surv = np.array([(x > g).mean() for g in grid])
    slope = np.polyfit(np.log(grid), np.log(surv), 1)[0]
    # the j = 2 component dominates far out: v^(2/3) G(v) ~ v^-(sigma - 2/3)
    assert slope == pytest.approx(-(LAW.sigma - 5 / 3), abs=0.05)


def test_sample_jump_reproducible():
    a = S.sample_jump(3.0, LAW, stream=(1, 2), size=100)
    assert np.array_equal(a, S.sample_jump(3.0, LAW, stream=(1, 2), size=100))
    assert not np.array_equal(a, S.sample_jump(3.0, LAW, stream=(1, 3), size=100))


def test_exact_trajectory_invariants():
    tr = S.simulate(0.0, 2.0, LAW, seed=3)
    assert np.all(np.diff(tr.times) > 0)
    assert np.all(np.diff(tr.volumes) > 0)
    assert tr.v_end == tr.volumes[-1]
    assert tr.times[-1] <= 2.0
    assert tr.events[0] == (tr.times[0], tr.volumes[0])


def test_trajectory_rejects_bad_paths():
    with pytest.raises(AssertionError):
        S.Trajectory(0, np.array([0.0, 1.0, 0.5]), np.array([0.0, 1.0, 2.0]), 2.0, 2.0)
    with pytest.raises(AssertionError):
        S.Trajectory(0, np.array([0.0, 1.0]), np.array([1.0, 0.5]), 2.0, 0.5)


def test_event_cap():
    with pytest.raises(EventCapError) as info:
        S.simulate(0.0, 1e3, LAW, seed=1, max_events=50)
    assert info.value.partial is not None


def test_frozen_clock_never_moves():
    ens = S.ensemble(500, 2.5, [1.0, 10.0], S.FrozenClock(3.0), 1)
    assert np.all(ens.volumes == 2.5)


@settings(max_examples=10)
@given(st.integers(0, 2**31), st.sampled_from([7, 64, 1000]))
def test_ensemble_independent_of_batching(seed, block):
    a = S.ensemble(150, 0.0, [0.5, 1.0], LAW, seed, stop_above=1e4)
    b = S.ensemble(150, 0.0, [0.5, 1.0], LAW, seed, block=block, stop_above=1e4)
    assert a.checksum() == b.checksum()


def test_ensemble_prefix_stable():
    small = S.ensemble(50, 0.0, [1.0], LAW, 9, small_jump_fraction=0.01)
    big = S.ensemble(200, 0.0, [1.0], LAW, 9, small_jump_fraction=0.01)
    assert np.array_equal(small.volumes, big.volumes[:50])


def test_hybrid_agrees_with_exact():
    ck = [0.5, 1.0]
    exact = S.ensemble(4000, 0.0, ck, LAW, 21, stop_above=1e5)
    hybrid = S.ensemble(4000, 0.0, ck, LAW, 22, small_jump_fraction=0.01, stop_above=1e5)
    for t in ck:
        assert stats.ks_2samp(exact.at(t), hybrid.at(t)).pvalue > 1e-3


def test_ensemble_validation():
    with pytest.raises(DomainError):
        S.ensemble(0, 0.0, [1.0], LAW, 1)
    with pytest.raises(DomainError):
        S.ensemble(10, 0.0, [2.0, 1.0], LAW, 1)
    with pytest.raises(DomainError):
        S.ensemble(10, 0.0, [1.0], "not a law", 1)


@pytest.fixture(scope="module")
def grown():
    return S.ensemble(3000, 0.0, [1e2, 1e3, 1e4], LAW, 5, small_jump_fraction=0.01)


def test_scaling_slope_close_to_mu(grown):
    slope, err = S.scaling_exponent(grown)
    assert err > 0
    assert abs(slope / grown.mu - 1) < 0.1


def test_scaling_needs_span():
    ens = S.ensemble(200, 0.0, [10.0, 20.0, 40.0], LAW, 1, small_jump_fraction=0.01)
    with pytest.raises(DomainError):
        S.scaling_exponent(ens)
    with pytest.raises(DomainError):
        S.scaling_exponent(S.ensemble(50, 1.0, [1.0, 10.0, 100.0], S.FrozenClock(1.0), 1))


def test_profile_mass_and_ks(grown):
    p1, p2 = S.profile(grown, 1e3), S.profile(grown, 1e4, bins=20)
    assert p1.counts.sum() == grown.N and p2.mass == 1.0
    assert np.isinf(p2.edges[-1]) and len(p2.counts) == 21
    assert S.ks_distance(p1, p1) == 0.0
    assert S.ks_distance(p1, p2) < 0.1


def test_moment_report(grown):
    rep = S.moments(grown, 0.1, 0.5)
    assert rep.bounded
    assert rep.taus == pytest.approx(np.log1p(grown.checkpoints))
    with pytest.raises(DomainError):
        S.moments(grown, 0.3, 0.5)
    with pytest.raises(DomainError):
        S.moments(grown, 0.1, 0.0)
