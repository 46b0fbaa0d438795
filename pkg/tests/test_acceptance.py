"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from honestsets.functional_estimators import (functional_r_kn, hoeffding_parts,
                                              naive_u_statistic, sample_density,
                                              sample_regression, true_coeffs, u_statistic)
from honestsets.harness import (ExperimentConfig, mix_seed, run_coverage, run_duality,
                                run_normality, run_rates, run_sparse)
from honestsets.norm_estimation import r_kn, residual_moments
from honestsets.sequence_core import Ellipsoid, Profile, boundary_theta, error_family, sample_sequence

ALPHA = 0.05
COVERAGE_PROFILES = ("spike:1", "spike:3", "spike:20", "equal:5", "geometric:0.5", "zero", "worst")


def _line(tag, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {tag}: {detail}"


def _emit(capsys, line):
    with capsys.disabled():
        print("\n" + line)


# --------------------------------------------------------------------- checks

def check_honest_coverage():
    cfg = ExperimentConfig(beta=1.0, L=1.0, profiles=COVERAGE_PROFILES, n_grid=(256, 4096),
                           alpha=ALPHA, reps=2000, rule="normal", master_seed=101, threads=4)
    rows = run_coverage(cfg).rows
    worst = min(rows, key=lambda r: r.coverage)
    ok = len(cfg.profiles) >= 5 and all(r.coverage >= 0.94 for r in rows)
    return ok, f"min coverage {worst.coverage:.4f} ({worst.profile}, n={worst.n}) over {len(rows)} cells"


def check_unbiased_and_variance():
    reps, n, k = 10_000, 1000, 50
    model = Ellipsoid(1.0, 1.0)
    theta = boundary_theta(model, Profile("geometric", 0.7), k)
    theta_hat = theta + 0.03 * np.cos(np.arange(k))
    s2, s1 = residual_moments(theta, theta_hat, k)
    worst_z, worst_v = 0.0, 0.0
    for name in ("standard_normal", "exponential"):
        dist = error_family(name)
        draws = np.array([r_kn(sample_sequence(theta, 1.0, n, k, mix_seed(7, i), dist),
                               theta_hat, k, dist=dist).r for i in range(reps)])
        est = r_kn(sample_sequence(theta, 1.0, n, k, 0, dist), theta_hat, k, dist=dist)
        se = draws.std(ddof=1) / math.sqrt(reps)
        worst_z = max(worst_z, abs(draws.mean() - s2) / se)
        worst_v = max(worst_v, abs(draws.var(ddof=1) / est.tau2(s2, s1) - 1.0))
    ok = worst_z <= 3.0 and worst_v <= 0.10
    return ok, f"max |mean - s2| = {worst_z:.2f} SE, max relative variance gap {worst_v:.3f}"


def check_normality():
    cfg = ExperimentConfig(profiles=("zero", "flat:200:0.05", "flat:200:1.0"), n_grid=(10_000,),
                           reps=10_000, normality_k=(200,), master_seed=303, threads=4)
    rows = run_normality(cfg).rows
    ks = max(r.ks for r in rows)
    return ks < 0.02, "KS per profile " + ", ".join(f"{r.profile}={r.ks:.4f}" for r in rows)


def _functional_exceedances(kind, f_name, n, k, reps, seed):
    theta = true_coeffs(f_name, k, kind)
    centers = (np.zeros(k), theta * 0.5)
    cut = 1.0 / math.sqrt(ALPHA)
    hits = total = 0
    for c_idx, theta_hat in enumerate(centers):
        for rep in range(reps):
            s = mix_seed(seed, c_idx, rep)
            data = sample_density(f_name, n, s) if kind == "density" \
                else sample_regression(f_name, "hetero", n, s)
            est = functional_r_kn(data, theta_hat, k)
            d2, _ = residual_moments(theta, theta_hat, k)
            hits += abs(est.r - d2) / est.tau(d2) > cut
            total += 1
    return hits / total, total


def check_chebyshev():
    out, ok = [], True
    base = ExperimentConfig(n_grid=(10_000,), reps=10_000, alpha=ALPHA, master_seed=404, threads=4)
    for errors, profiles, k in (("standard_normal", ("zero", "flat:200:1.0"), 200),
                                ("exponential", ("flat:400:0.3", "flat:400:1.0"), 400)):
        rows = run_normality(replace(base, errors=errors, profiles=profiles, normality_k=(k,))).rows
        for r in rows:
            bound = ALPHA + 2 * r.cheb_se
            ok &= r.cheb_exceed <= bound
            out.append(f"{errors}/{r.profile}={r.cheb_exceed:.4f}")
    for kind, f_name in (("density", "wave"), ("regression", "mixed")):
        rate, total = _functional_exceedances(kind, f_name, 200, 16, 2000, 405)
        bound = ALPHA + 2 * math.sqrt(ALPHA * (1 - ALPHA) / total)
        ok &= rate <= bound
        out.append(f"{kind}/{f_name}={rate:.4f}")
    return ok, "exceedance " + ", ".join(out)


RATE_SETTINGS = (
    # (beta, beta1, profile, target)
    (1.0, 1.0, "worst", -1 / 3),
    (1.0, 2.0, "spike:1", -2 / 5),
    (0.5, 0.5, "worst", -1 / 4),
)


def check_rate_slopes():
    out, ok = [], True
    for beta, beta1, profile, target in RATE_SETTINGS:
        cfg = ExperimentConfig(beta=beta, L=10.0, beta1=beta1, L1=10.0, profiles=(profile,),
                               n_grid=(2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14), reps=500,
                               master_seed=505, threads=4)
        fit = run_rates(cfg).fit(profile)
        ok &= abs(fit.slope - target) <= 0.07
        out.append(f"(beta={beta}, beta1={beta1}) slope {fit.slope:.3f} vs {target:.3f}")
    return ok, "; ".join(out)


def check_plugin_variance():
    cov = ExperimentConfig(beta=1.0, L=1.0, profiles=COVERAGE_PROFILES, n_grid=(256, 4096),
                           reps=2000, sigma="estimated", master_seed=606, threads=4)
    rows = run_coverage(cov).rows
    cov_ok = all(r.coverage >= 0.94 for r in rows)
    trend = replace(cov, profiles=("spike:1", "equal:5", "zero"),
                    n_grid=(256, 1024, 4096, 16384), reps=500)
    trows = run_coverage(trend).rows
    mono = True
    for p in trend.profiles:
        seq = [r for r in trows if r.profile == p]
        for a, b in zip(seq, seq[1:]):
            mono &= b.sigma_err <= a.sigma_err + 2 * math.hypot(a.sigma_err_se, b.sigma_err_se)
    errs = ", ".join(f"{r.sigma_err:.3f}" for r in trows if r.profile == "spike:1")
    min_cov = min(r.coverage for r in rows)
    return cov_ok and mono, f"min coverage {min_cov:.4f}; sqrt(k)|err| for spike:1 over n: {errs}"


def check_u_statistic_oracle():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(100):
        n, k = int(rng.integers(2, 51)), int(rng.integers(1, 21))
        g = rng.normal(size=(n, k)) * rng.uniform(0.01, 100)
        fast, slow = u_statistic(g), naive_u_statistic(g)
        worst = max(worst, abs(fast - slow) / max(abs(slow), np.abs(g).max() ** 2 * 1e-3))
    return worst <= 1e-10, f"max relative difference {worst:.2e} over 100 instances"


def check_hoeffding_orthogonality():
    reps, n, k = 10_000, 200, 16
    theta = true_coeffs("wave", k, "density")
    theta_hat = np.zeros(k)
    lin = np.empty(reps)
    deg = np.empty(reps)
    for i in range(reps):
        _, lin[i], deg[i] = hoeffding_parts(sample_density("wave", n, mix_seed(808, i)),
                                            theta, theta_hat, k)
    prod = (lin - lin.mean()) * (deg - deg.mean())
    z = prod.mean() / (prod.std(ddof=1) / math.sqrt(reps))
    return abs(z) <= 3.0, f"cov(linear, degenerate) = {prod.mean():.3e} ({z:+.2f} SE)"


def check_duality():
    cfg = ExperimentConfig(beta=1.0, L=1.0, profiles=("spike:1",), n_grid=(256, 1024, 4096),
                           reps=1000, alpha=ALPHA, master_seed=909, threads=4)
    rows = run_duality(cfg).rows
    ok = all(r.reject_rate <= ALPHA + 2 * r.binomial_se and
             r.estimator_miss_rate <= ALPHA + 2 * r.binomial_se for r in rows)
    worst_t = max(r.reject_rate for r in rows)
    worst_e = max(r.estimator_miss_rate for r in rows)
    return ok, f"max type-I {worst_t:.4f}, max estimator miss {worst_e:.4f}"


def check_sparse():
    cfg = ExperimentConfig(beta=1.0, profiles=("zero", "flat:1:1.0", "flat:sqrt:2.0", "flat:all:1.0"),
                           n_grid=(256, 1024, 4096), reps=200, master_seed=1010, threads=4)
    rep = run_sparse(cfg)
    tracked = ("zero", "flat:1:1.0", "flat:sqrt:2.0")
    bands_ok = all(rep.band(p) < 4.0 for p in tracked)
    dense = [r.median_diameter for r in rep.rows if r.profile == "flat:all:1.0"]
    # n^{-1/4} would shrink the diameter by a factor 2 over this grid
    stuck = dense[-1] / dense[0] > 0.8
    bands = ", ".join(f"{p}={rep.band(p):.2f}" for p in tracked)
    return bands_ok and stuck, f"bands {bands}; D=n diameters {dense[0]:.3f} -> {dense[-1]:.3f}"


def check_determinism():
    small = dict(reps=100, master_seed=1111)
    reports = [
        (run_coverage, ExperimentConfig(profiles=("spike:1", "worst"), n_grid=(256, 1024),
                                        sigma="estimated", **small)),
        (run_coverage, ExperimentConfig(model="density", L=2.0, profiles=("bump",),
                                        n_grid=(400,), **small)),
        (run_rates, ExperimentConfig(profiles=("worst",), n_grid=(256, 1024), **small)),
        (run_normality, ExperimentConfig(profiles=("zero",), n_grid=(1000,), normality_k=(50,),
                                         errors="exponential", **small)),
        (run_sparse, ExperimentConfig(profiles=("flat:sqrt:1.0",), n_grid=(64, 256), **small)),
        (run_duality, ExperimentConfig(profiles=("spike:1",), n_grid=(256,), **small)),
    ]
    ok = True
    for fn, cfg in reports:
        texts = {fn(replace(cfg, threads=t)).to_csv() for t in (1, 1, 3, 8)}
        ok &= len(texts) == 1
    return ok, f"{len(reports)} reports byte-identical across 2 runs and 1/3/8 threads"


CRITERIA = [
    ("1 honest coverage", check_honest_coverage),
    ("2 unbiasedness and variance of the distance estimate", check_unbiased_and_variance),
    ("3 uniform normality", check_normality),
    ("4 Chebyshev guarantee", check_chebyshev),
    ("5 diameter rate slopes", check_rate_slopes),
    ("6 plug-in noise variance", check_plugin_variance),
    ("7 U-statistic oracle", check_u_statistic_oracle),
    ("8 Hoeffding orthogonality", check_hoeffding_orthogonality),
    ("9 duality", check_duality),
    ("10 sparse finite model", check_sparse),
    ("11 determinism", check_determinism),
]


@pytest.mark.parametrize("tag,check", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(tag, check, capsys):
    ok, detail = check()
    _emit(capsys, _line(tag, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    import sys
    failures = 0
    for tag, check in CRITERIA:
        ok, detail = check()
        print(_line(tag, ok, detail), flush=True)
        failures += not ok
    sys.exit(1 if failures else 0)
