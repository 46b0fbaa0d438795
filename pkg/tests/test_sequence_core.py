import math

import numpy as np
import pytest

from honestsets.errors import InfeasibleWindow, InvalidArgument
from honestsets.norminv import norm_ppf
from honestsets.sequence_core import (ERROR_FAMILIES, Ellipsoid, Profile, SequenceSample,
                                      boundary_theta, error_family, sample_sequence,
                                      select_window, sigma_hat, split_randomize)


def test_ellipsoid_membership():
    m = Ellipsoid(1.0, 1.0)
    assert m.contains([1.0])
    assert m.contains([0.0, 0.5])
    assert not m.contains([0.0, 0.6])
    assert [0.5, 0.25] in m


def test_finite_dim_rejects_tail():
    m = Ellipsoid(1.0, math.inf, finite_dim=3)
    assert m.contains([5.0, 5.0, 5.0])
    assert not m.contains([0, 0, 0, 1e-3])


@pytest.mark.parametrize("beta,L", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_bad_ellipsoid(beta, L):
    with pytest.raises(InvalidArgument):
        Ellipsoid(beta, L)


def test_boundary_profiles_on_boundary():
    m = Ellipsoid(1.0, 1.0)
    # equal energy over 2 coordinates: c^2 (1 + 4) = 1
    th = boundary_theta(m, Profile("equal", 2), 8)
    assert th[:2] == pytest.approx([1 / math.sqrt(5)] * 2)
    assert th[2:].sum() == 0
    sp = boundary_theta(m, Profile("spike", 3), 8)
    assert sp[2] == pytest.approx(1 / 3)
    for prof in ("spike:1", "equal:5", "geometric:0.5"):
        assert m.energy(boundary_theta(m, Profile.parse(prof), 40)) == pytest.approx(1.0)


def test_profile_parse_errors():
    with pytest.raises(InvalidArgument):
        Profile.parse("sparkle:2")
    with pytest.raises(InvalidArgument):
        Profile.parse("spike:x")


def test_sample_is_read_only_and_deterministic():
    a = sample_sequence([1.0, 2.0], 1.0, 100, 5, seed=7)
    b = sample_sequence([1.0, 2.0], 1.0, 100, 5, seed=7)
    assert np.array_equal(a.values, b.values)
    with pytest.raises(ValueError):
        a.values[0] = 3.0
    assert a.noise_var == pytest.approx(0.01)


def test_split_with_given_uniforms():
    x = SequenceSample([1.0, 0.0], n=4, sigma2=1.0)
    u = [0.5, 0.975]
    pair = split_randomize(x, seed=0, uniforms=u)
    shift = norm_ppf(0.975) * 0.5
    assert pair.first.values == pytest.approx([1.0, shift])
    assert pair.second.values == pytest.approx([1.0, -shift])
    assert pair.first.sigma2 == 2.0
    assert (pair.first.values + pair.second.values) / 2 == pytest.approx(x.values)


def test_split_halves_independent_with_doubled_variance():
    n, K = 50, 20000
    x = sample_sequence(np.zeros(K), 1.0, n, K, seed=11)
    pair = split_randomize(x, seed=11)
    f, s = pair.first.values, pair.second.values
    assert np.var(f) * n == pytest.approx(2.0, rel=0.05)
    assert np.var(s) * n == pytest.approx(2.0, rel=0.05)
    assert abs(np.corrcoef(f, s)[0, 1]) < 4 / math.sqrt(K)


def test_sigma_hat_window():
    x = SequenceSample([9.0, 1.0, 2.0], n=2, sigma2=1.0)
    # (n/l) * (1 + 4) with n=2, l=2
    assert sigma_hat(x, 1, 2) == pytest.approx(5.0)
    y = SequenceSample([0.0, 1.0, 0.5, 1.0], n=1, sigma2=1.0)
    assert sigma_hat(y, 1, 2) == pytest.approx(0.625)
    with pytest.raises(InvalidArgument):
        sigma_hat(x, 2, 2)


def test_select_window_values():
    # 1024^(1/2.5) = 16, l = ceil(16 log 1024) = 111
    assert select_window(1.0, 1024) == (16, 111)
    with pytest.raises(InfeasibleWindow):
        select_window(0.25, 1024, finite_dim=1024)
    with pytest.raises(InfeasibleWindow):
        select_window(1.0, 1024, finite_dim=16)


@pytest.mark.parametrize("name", sorted(ERROR_FAMILIES))
def test_error_families_are_standardized(name):
    dist = error_family(name)
    rng = np.random.default_rng(5)
    e = dist.sample(rng, 400000)
    assert e.mean() == pytest.approx(0.0, abs=0.01)
    assert e.var() == pytest.approx(1.0, abs=0.02)
    assert np.var(e ** 2) == pytest.approx(dist.var_eps2, rel=0.06, abs=0.01)
    assert np.cov(e ** 2, e)[0, 1] == pytest.approx(dist.cov_eps2_eps, abs=0.06)
    assert abs(dist.correlation) < 1


def test_unknown_error_family():
    with pytest.raises(InvalidArgument):
        error_family("cauchy")
