import math

import numpy as np
import pytest

from honestsets.errors import InvalidArgument
from honestsets.norm_estimation import (NormEstimate, QuantileRule, SimulationContext,
                                        nonnormal_variance_components, quantile, r_kn,
                                        residual_moments, simulate_statistic, tau_plugin)
from honestsets.sequence_core import STANDARD_NORMAL, SequenceSample, error_family


def test_r_kn_hand_example():
    x = SequenceSample([0.3, -0.1, 0.2, 9.0], n=100, sigma2=1.0)
    est = r_kn(x, [0.1, 0.0], k=3)
    # 0.04 + 0.01 + 0.04 - 3/100
    assert est.r == pytest.approx(0.06)
    assert est.a == pytest.approx(2 * 3 / 100 ** 2)
    assert est.b == pytest.approx(4 / 100)
    assert est.c == 0.0


def test_tau_hand_example():
    # k = 4, n = 100: a = 8e-4, b = 0.04; s2 = 0.25 gives 0.0108
    est = NormEstimate(0.0, 8e-4, 0.04, 0.0, 4, 100)
    assert tau_plugin(est, 0.25) == pytest.approx(math.sqrt(0.0108))
    assert tau_plugin(est, 0.25) == pytest.approx(0.10392, abs=1e-5)
    with pytest.raises(InvalidArgument):
        tau_plugin(est, -1.0)


def test_exponential_components_and_clamp():
    dist = error_family("exponential")
    a, b, c = nonnormal_variance_components(dist, 10, 100, 1.0)
    assert (a, b) == pytest.approx((10 * 8 / 100 ** 2, 0.04))
    assert c == pytest.approx(4 * 2 / 1000)
    est = NormEstimate(0.0, a, b, c, 10, 100, corr=dist.correlation)
    # large negative s1 pushes the raw value below the floor
    assert est.tau_clamped(0.01, -10.0)
    assert est.tau2(0.01, -10.0) == pytest.approx((1 - dist.correlation) * (a + b * 0.01))
    assert not est.tau_clamped(0.01, 0.0)


def test_radius_components_dominate():
    est = NormEstimate(0.0, 1e-3, 0.02, 5e-3, 9, 100, corr=0.5)
    a2, b2 = est.radius_components()
    rng = np.random.default_rng(0)
    for _ in range(200):
        d = rng.normal(size=9) * rng.uniform(0, 1)
        s2, s1 = float(d @ d), float(d.sum())
        assert est.tau2(s2, s1) <= a2 + b2 * s2 + 1e-15


def test_residual_moments():
    assert residual_moments([1.0, 2.0, 3.0], [0.5, 2.0], 3) == pytest.approx((0.25 + 9.0, 3.5))


def test_quantiles():
    assert quantile(QuantileRule("normal", 0.025)) == pytest.approx(1.959964, abs=1e-6)
    assert quantile(QuantileRule("normal", 0.05, two_sided=True)) == pytest.approx(1.959964, abs=1e-6)
    assert quantile(QuantileRule("chebyshev", 0.05)) == pytest.approx(math.sqrt(20))


def test_simulated_quantile_near_normal_for_large_k():
    ctx = SimulationContext(np.zeros(400), 400, 1000, 1.0, STANDARD_NORMAL)
    z = quantile(QuantileRule("simulated", 0.05, reps=20000, seed=1), ctx)
    # chi-square skew makes the lower tail lighter than normal
    assert 1.5 < z < 1.65


def test_simulated_law_is_standardized():
    theta = np.r_[0.2, np.zeros(49)]
    ctx = SimulationContext(np.zeros(50), 50, 200, 1.0, STANDARD_NORMAL)
    d = simulate_statistic(theta, ctx, 40000, seed=2)
    assert d.mean() == pytest.approx(0.0, abs=0.02)
    assert d.var() == pytest.approx(1.0, abs=0.03)


def test_rule_validation():
    with pytest.raises(InvalidArgument):
        QuantileRule("normal", 1.5)
    with pytest.raises(InvalidArgument):
        QuantileRule("bootstrap", 0.05)
    with pytest.raises(InvalidArgument):
        quantile(QuantileRule("simulated", 0.05))
    x = SequenceSample([0.0], n=1, sigma2=1.0)
    with pytest.raises(InvalidArgument):
        r_kn(x, [0.0], k=2)
