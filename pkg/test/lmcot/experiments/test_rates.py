import math

import numpy as np
import pytest

from lmcot.assignment import w2_squared
from lmcot.errors import ArgumentError, ConfigurationError
from lmcot.experiments import rates
from lmcot.experiments.rates import RatePoint, UniformLaw
from lmcot.numerics import CovarianceSpec, make_rng

SMALL_M = [8, 16, 32, 64]


def _points(ms, fn):
    return [RatePoint(m=m, mean_cost=fn(m), std_err=0.0) for m in ms]


def test_fit_slope__exact_power_law():
    fit = rates.fit_slope(_points([10, 100, 1000], lambda m: 3.0 * m**-0.5))
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.r_squared == pytest.approx(1.0)


def test_fit_slope__two_points():
    fit = rates.fit_slope(_points([4, 16], lambda m: 1.0 / m))
    assert fit.slope == pytest.approx(-1.0)


def test_fit_slope__flat_costs():
    fit = rates.fit_slope(_points([4, 8, 16], lambda m: 2.0))
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 1.0


def test_fit_slope__rejects_bad_points():
    with pytest.raises(ArgumentError):
        rates.fit_slope(_points([4], lambda m: 1.0))
    with pytest.raises(ArgumentError):
        rates.fit_slope(_points([8, 4, 16], lambda m: 1.0))
    with pytest.raises(ArgumentError):
        rates.fit_slope(_points([4, 8], lambda m: 0.0))


def test_empirical_rate__rejects_bad_sweeps():
    law = CovarianceSpec.isotropic(2)
    with pytest.raises(ConfigurationError):
        rates.empirical_rate(law, SMALL_M, trials=2, seed=0)
    with pytest.raises(ConfigurationError):
        rates.empirical_rate(law, [16, 8, 32], trials=5, seed=0)
    with pytest.raises(ConfigurationError):
        rates.empirical_rate(CovarianceSpec((2,), (-1.0,)), SMALL_M, trials=5, seed=0)


def test_empirical_rate__decreasing_and_deterministic():
    law = CovarianceSpec.isotropic(1)
    fit = rates.empirical_rate(law, SMALL_M, trials=10, seed=3)
    assert [p.m for p in fit.points] == SMALL_M
    assert fit.slope < 0
    assert all(p.std_err >= 0 for p in fit.points)

    again = rates.empirical_rate(law, SMALL_M, trials=10, seed=3)
    assert again.slope == fit.slope
    assert [p.mean_cost for p in again.points] == [p.mean_cost for p in fit.points]


def test_empirical_rate__threads_give_same_result():
    law = UniformLaw(n=2)
    serial = rates.empirical_rate(law, SMALL_M, trials=4, seed=9)
    parallel = rates.empirical_rate(law, SMALL_M, trials=4, seed=9, threads=2)
    assert [p.mean_cost for p in parallel.points] == [p.mean_cost for p in serial.points]


def test_empirical_rate__higher_dimension_decays_slower():
    ms = [16, 64, 256]
    low = rates.empirical_rate(CovarianceSpec.isotropic(2), ms, trials=8, seed=1)
    high = rates.empirical_rate(CovarianceSpec.isotropic(10), ms, trials=8, seed=1)
    assert high.slope > low.slope


def test_two_sample_cost__uniform_law_in_range():
    rng = make_rng(0)
    cost = rates.two_sample_cost(UniformLaw(n=3, half_width=0.5), 20, rng)
    # Every coordinate lies in [-0.5, 0.5], so no pair is more than 3 apart squared.
    assert 0.0 < cost <= 3.0


def test_low_dimensional_spec():
    spec = rates.low_dimensional_spec(10, 2, 0.05)
    assert spec.eta(2) == pytest.approx(0.05)
    assert spec.group_sizes == (2, 8)
    assert rates.low_dimensional_spec(4, 4, 0.3) == CovarianceSpec.isotropic(4)
    with pytest.raises(ConfigurationError):
        rates.low_dimensional_spec(3, 2, 10.0)
    with pytest.raises(ConfigurationError):
        rates.low_dimensional_spec(3, 4, 0.1)


def test_lowdim_rate__full_rank_matches_empirical_rate():
    report = rates.lowdim_rate(3, 3, 0.0, SMALL_M, trials=4, seed=5)
    plain = rates.empirical_rate(CovarianceSpec.isotropic(3), SMALL_M, trials=4, seed=5)
    assert report.regime_limit == math.inf
    assert report.eta == 0.0
    assert report.fit.slope == plain.slope


def test_lowdim_rate__fits_inside_regime_only():
    # eta^-k = 0.1^-1 = 10, so only m = 4 and m = 8 enter the fit.
    report = rates.lowdim_rate(5, 1, 0.1, [4, 8, 16, 32], trials=4, seed=2)
    assert report.regime_limit == pytest.approx(10.0)
    assert len(report.fit.points) == 4
    in_regime = rates.fit_slope(report.fit.points[:2])
    assert report.fit.slope == pytest.approx(in_regime.slope)

    with pytest.raises(ConfigurationError):
        rates.lowdim_rate(5, 1, 0.1, [8, 16, 32], trials=4, seed=2)


def test_lower_bound_cost():
    rng = make_rng(4)
    W_A = rng.standard_normal((6, 3))
    W_B = rng.standard_normal((6, 3))
    perm, cost = rates.lower_bound_cost(W_A, W_B)
    assert cost == pytest.approx(w2_squared(W_A, W_B))
    assert sorted(perm.tolist()) == list(range(6))

    # An input covariance of 4 I scales every cost by 4.
    _, scaled = rates.lower_bound_cost(W_A, W_B, 2.0 * np.eye(3))
    assert scaled == pytest.approx(4.0 * cost)


def test_lower_bound_rate__decreasing():
    fit = rates.lower_bound_rate(1, SMALL_M, trials=8, seed=0)
    assert fit.slope < 0


def test_gain_instance__dominance():
    rng = make_rng(6)
    for _ in range(50):
        W_A = rng.standard_normal((12, 5))
        W_B = rng.standard_normal((12, 5))
        naive, weighted = rates.gain_instance(W_A, W_B, 2)
        assert weighted <= naive


def test_gain_rates__no_violations():
    report = rates.gain_rates(6, 2, SMALL_M, trials=4, seed=1)
    assert report.dominance_violations == 0
    assert report.instances == len(SMALL_M) * 4
    assert len(report.per_instance) == report.instances
    for naive, weighted in zip(report.naive.points, report.weighted.points):
        assert weighted.mean_cost <= naive.mean_cost


def test_gain_rates__full_rank_sigma_is_the_identity():
    report = rates.gain_rates(3, 3, SMALL_M, trials=4, seed=1)
    for naive, weighted in zip(report.naive.points, report.weighted.points):
        assert weighted.mean_cost == pytest.approx(naive.mean_cost)
    with pytest.raises(ConfigurationError):
        rates.gain_rates(3, 4, SMALL_M, trials=4, seed=1)


@pytest.mark.slow
def test_empirical_rate__slope_near_minus_two_over_n():
    ms = [64, 128, 256, 512, 1024]
    for n in (5, 10):
        fit = rates.empirical_rate(CovarianceSpec.isotropic(n), ms, trials=20, seed=0)
        assert abs(fit.slope + 2.0 / n) < 0.5 * (2.0 / n) + 0.1


@pytest.mark.slow
def test_lowdim_rate__slope_follows_k():
    report = rates.lowdim_rate(20, 2, 0.01, [64, 128, 256, 512, 1024], trials=20, seed=0)
    assert report.fit.slope < -0.5


DOUBLING = [64, 128, 256, 512, 1024, 2048, 4096]


@pytest.mark.slow
def test_empirical_rate__two_dimensional_gaussian_band():
    low = rates.empirical_rate(CovarianceSpec.isotropic(2), DOUBLING, trials=20, seed=0)
    assert -1.35 <= low.slope <= -0.65
    high = rates.empirical_rate(CovarianceSpec.isotropic(10), DOUBLING, trials=20, seed=0)
    assert abs(high.slope) < abs(low.slope)


@pytest.mark.slow
def test_lower_bound_rate__no_faster_than_two_dimensional_rate():
    fit = rates.lower_bound_rate(2, DOUBLING, trials=20, seed=0)
    assert fit.slope >= -1.35


@pytest.mark.slow
def test_gain_rates__weighted_decays_faster():
    report = rates.gain_rates(10, 2, DOUBLING, trials=10, seed=0)
    assert report.dominance_violations == 0
    assert report.weighted.slope <= report.naive.slope - 0.4


@pytest.mark.slow
def test_lowdim_rate__two_dimensional_regime():
    report = rates.lowdim_rate(10, 2, 1e-3, DOUBLING, trials=20, seed=0)
    assert report.regime_limit == pytest.approx(1e6)
    assert abs(report.fit.slope + 1.0) <= 0.35
