"""Seeded Monte Carlo experiments: coverage, diameter rates, normality, sparse
models and the duality reductions.

Every replication draws its randomness from ``mix_seed(master_seed, ...)`` and
results are gathered in index order, so reports do not depend on the number
of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .confidence_set import SigmaSource, build_ball, cutoff
from .duality import TestProblem, confset_to_estimator, confset_to_test, floor_exponent, floor_rate
from .errors import ConfigError
from .functional_estimators import (density_spec, regression_spec, sample_density,
                                    sample_regression, true_coeffs)
from .initial_estimators import center_estimate, condition_35_diagnostic
from .norm_estimation import QuantileRule, standardized_statistic
from .sequence_core import (Ellipsoid, Profile, _ceil, as_sequence, boundary_theta,
                            error_family, sample_sequence, select_window, sigma_hat,
                            split_randomize)

MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix_seed(*parts: int) -> int:
    """Stable 64-bit hash of a tuple of integers."""
    h = 0x243F6A8885A308D3
    for p in parts:
        h = _splitmix64(h ^ (int(p) & MASK64))
    return h


def _tuple(value, cast):
    if isinstance(value, str):
        value = [v for v in value.replace(";", ",").split(",") if v.strip()]
    return tuple(cast(v.strip() if isinstance(v, str) else v) for v in value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment; see README for the key reference."""

    model: str = "sequence"
    beta: float = 1.0
    L: float = 1.0
    finite_dim: Optional[int] = None
    beta1: Optional[float] = None
    L1: Optional[float] = None
    profiles: tuple = ("spike:1",)
    n_grid: tuple = (256, 4096)
    alpha: float = 0.05
    reps: int = 500
    rule: str = "normal"
    sigma: str = "known:1"
    estimator: str = "adaptive"
    project: bool = True
    errors: str = "standard_normal"
    noise: str = "gaussian:1"
    K: Optional[int] = None
    k: Optional[int] = None
    floor: bool = False
    normality_k: tuple = (200,)
    eps35: float = 0.05
    eps_mult: float = 6.0
    master_seed: int = 0
    threads: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        conv = {
            "profiles": lambda v: _tuple(v, str),
            "n_grid": lambda v: _tuple(v, int),
            "normality_k": lambda v: _tuple(v, int),
        }
        for key, fn in conv.items():
            object.__setattr__(self, key, fn(getattr(self, key)))
        if self.model not in ("sequence", "density", "regression"):
            raise ConfigError(f"unknown model kind {self.model!r}")
        if self.reps < 100:
            raise ConfigError("reps must be at least 100")
        if not self.n_grid or list(self.n_grid) != sorted(set(self.n_grid)):
            raise ConfigError("n_grid must be nonempty and strictly ascending")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.rule not in ("normal", "chebyshev", "simulated"):
            raise ConfigError(f"unknown rule {self.rule!r}")
        if not self.profiles:
            raise ConfigError("at least one profile is required")
        if self.threads < 1:
            raise ConfigError("threads must be positive")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            key = key.strip().replace("-", "_")
            if key == "seed":
                key = "master_seed"
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @property
    def supermodel(self) -> Ellipsoid:
        return Ellipsoid(self.beta, self.L, self.finite_dim)

    @property
    def submodel(self) -> Ellipsoid:
        b1 = self.beta if self.beta1 is None else self.beta1
        l1 = self.L if self.L1 is None else self.L1
        return Ellipsoid(b1, l1, self.finite_dim)


_INT_KEYS = {"finite_dim", "reps", "K", "k", "master_seed", "threads"}
_FLOAT_KEYS = {"beta", "L", "beta1", "L1", "alpha", "eps35", "eps_mult"}
_BOOL_KEYS = {"project", "floor"}


def _coerce(key, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return None if raw.lower() in ("", "none") else int(raw)
        if key in _FLOAT_KEYS:
            return None if raw.lower() in ("", "none") else float(raw)
        if key in _BOOL_KEYS:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None
    if key == "out" and raw.lower() in ("", "none", "-"):
        return None
    return raw


# ---------------------------------------------------------------- parameters

def resolve_theta(profile: Profile, cfg: ExperimentConfig, n: int, K: int) -> np.ndarray:
    """Concrete parameter for a profile at sample size n.

    Boundary shapes sit on the submodel's boundary; ``worst`` is the
    equal-energy boundary parameter over ``worst_support`` coordinates;
    ``flat:<count>:<norm>`` spreads the given l2 norm evenly (count may be
    ``sqrt`` or ``all``).
    """
    sub = cfg.submodel
    if profile.kind == "zero":
        return np.zeros(K)
    if profile.kind == "worst":
        support = worst_support(cfg, n)
        return boundary_theta(sub, Profile("equal", support), max(K, support))
    if profile.kind == "flat":
        count, norm = profile.param
        size = cfg.finite_dim or n
        if count == "sqrt":
            count = max(1, int(math.isqrt(size)))
        elif count == "all":
            count = size
        count = int(count)
        theta = np.zeros(max(K, count))
        theta[:count] = float(norm) / math.sqrt(count)
        return theta
    return boundary_theta(sub, profile, K)


def worst_support(cfg: ExperimentConfig, n: int) -> int:
    """Support size at which an equal-energy boundary point of the submodel has
    per-coordinate signal equal to the split noise level ``2 sigma2 / n``.

    Truncation cannot beat ``support * 2 sigma2 / n`` there, which is of the
    minimax order ``n^{-2 beta1 / (2 beta1 + 1)}``.
    """
    sub = cfg.submodel
    g = 2.0 * sub.beta + 1.0
    return max(1, _ceil((g * sub.L ** 2 * n / (2.0 * _raw_sigma2(cfg))) ** (1.0 / g)))


def parse_profile(text: str) -> Profile:
    if text == "worst":
        return Profile("worst", 0.0)
    if text.startswith("flat:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"flat profile needs flat:<count>:<norm>, got {text!r}")
        count = parts[1] if parts[1] in ("sqrt", "all") else int(parts[1])
        return Profile("flat", (count, float(parts[2])))
    return Profile.parse(text)


def _profile_support(profile: Profile, cfg: ExperimentConfig, n: int) -> int:
    if profile.kind == "spike":
        return int(profile.param)
    if profile.kind == "equal":
        return int(profile.param)
    if profile.kind == "worst":
        return worst_support(cfg, n)
    if profile.kind == "flat":
        return cfg.finite_dim or n
    return 1


def truncation_length(cfg: ExperimentConfig, n: int, profile: Profile) -> int:
    """Stored length K: at least twice the cut-off, the profile support and the variance window."""
    model = _sequence_model(cfg, n)
    k = cutoff(model, n, cfg.k).k
    K = max(2 * k, _profile_support(profile, cfg, n))
    src = SigmaSource.parse(cfg.sigma)
    if src.kind == "estimated":
        m, l = (src.m, src.l) if src.m is not None else select_window(cfg.beta, n, model.finite_dim)
        K = max(K, m + l)
    if cfg.K is not None:
        K = max(K, cfg.K)
    if model.finite_dim is not None:
        K = min(K, model.finite_dim)
    return K


def _sequence_model(cfg: ExperimentConfig, n: int) -> Ellipsoid:
    return Ellipsoid(cfg.beta, cfg.L, cfg.finite_dim)


def _raw_sigma2(cfg: ExperimentConfig) -> float:
    src = SigmaSource.parse(cfg.sigma)
    if src.kind == "known":
        return 1.0 if src.value is None else src.value
    return 1.0


def _rule(cfg: ExperimentConfig, seed: int) -> QuantileRule:
    return QuantileRule(cfg.rule, cfg.alpha, seed=seed & 0x7FFFFFFF)


# --------------------------------------------------------------- replications

@dataclass(frozen=True)
class Replication:
    covered: bool
    radius: float
    k: int
    bias: float
    sigma_err: float = math.nan
    ball: object = field(default=None, repr=False, compare=False)


def replicate_sequence(cfg: ExperimentConfig, theta: np.ndarray, n: int, K: int,
                       seed: int) -> Replication:
    """generate -> split -> center -> ball -> membership, for one seed."""
    model = _sequence_model(cfg, n)
    raw_sigma2 = _raw_sigma2(cfg)
    dist = error_family(cfg.errors)
    x = sample_sequence(theta, raw_sigma2, n, K, seed, dist)
    pair = split_randomize(x, seed)
    center = center_estimate(pair.first, model, cfg.estimator, cfg.project)
    src = SigmaSource.parse(cfg.sigma)
    if src.kind == "known":
        src = SigmaSource("known")
    ball = build_ball(pair.second, center.theta_hat, model, cfg.alpha, _rule(cfg, seed),
                      sigma_source=src, dist=dist, k=cfg.k, floor=cfg.floor)
    sigma_err = math.nan
    if src.kind == "estimated":
        sigma_err = math.sqrt(ball.k) * abs(ball.sigma2_used - pair.second.sigma2)
    return Replication(ball.contains(theta), ball.radius, ball.k, ball.bias, sigma_err, ball)


def replicate_functional(cfg: ExperimentConfig, f_name: str, n: int, seed: int) -> Replication:
    """Sample splitting for density or regression data."""
    model = cfg.supermodel
    if cfg.model == "density":
        data = sample_density(f_name, n, seed)
    else:
        data = sample_regression(f_name, cfg.noise, n, seed)
    first, second = data.halves()
    plan = cutoff(model, second.n, cfg.k)
    K = max(cfg.K or 0, 2 * plan.k, 16)
    theta = true_coeffs(f_name, K, cfg.model)
    center = center_estimate(first, model, cfg.estimator, cfg.project, K=K)
    ball = build_ball(second, center.theta_hat, model, cfg.alpha, _rule(cfg, seed),
                      k=cfg.k, floor=cfg.floor)
    return Replication(ball.contains(theta), ball.radius, ball.k, ball.bias, ball=ball)


def _map(cfg: ExperimentConfig, fn: Callable[[int], object], count: int) -> list:
    if cfg.threads == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(fn, range(count)))


# -------------------------------------------------------------------- reports

@dataclass(frozen=True)
class CoverageRow:
    model: str
    profile: str
    n: int
    k: int
    bias: float
    reps: int
    alpha: float
    rule: str
    coverage: float
    coverage_se: float
    mean_radius: float
    mean_diameter: float
    median_diameter: float
    sigma_err: float
    sigma_err_se: float

    COLUMNS = ("model", "profile", "n", "k", "bias", "reps", "alpha", "rule", "coverage",
               "coverage_se", "mean_radius", "mean_diameter", "median_diameter", "sigma_err",
               "sigma_err_se")


@dataclass
class CoverageReport:
    rows: list

    COLUMNS = CoverageRow.COLUMNS

    def to_csv(self) -> str:
        return format_csv(self.COLUMNS, [[getattr(r, c) for c in self.COLUMNS] for r in self.rows])


def _cell(cfg: ExperimentConfig, profile_index: int, profile_text: str, n: int) -> list:
    if cfg.model == "sequence":
        profile = parse_profile(profile_text)
        K = truncation_length(cfg, n, profile)
        theta = resolve_theta(profile, cfg, n, K)
        if not _sequence_model(cfg, n).contains(theta):
            raise ConfigError(f"profile {profile_text!r} is not inside the supermodel")

        def one(rep):
            return replicate_sequence(cfg, theta, n, K, mix_seed(cfg.master_seed, profile_index, n, rep))
    else:
        spec = density_spec(profile_text) if cfg.model == "density" else regression_spec(profile_text)
        if not cfg.supermodel.contains(spec.coeffs):
            raise ConfigError(f"function {profile_text!r} is not inside the supermodel")

        def one(rep):
            return replicate_functional(cfg, profile_text, n, mix_seed(cfg.master_seed, profile_index, n, rep))

    return _map(cfg, one, cfg.reps)


def _summarize(cfg, profile_text, n, reps_out) -> CoverageRow:
    covered = np.array([r.covered for r in reps_out], dtype=float)
    radii = np.array([r.radius for r in reps_out])
    cov = float(covered.mean())
    se = math.sqrt(max(cov * (1.0 - cov), 0.0) / covered.size)
    sig = np.array([r.sigma_err for r in reps_out])
    if np.all(np.isfinite(sig)):
        sigma_err, sigma_se = float(np.mean(sig)), float(np.std(sig, ddof=1) / math.sqrt(sig.size))
    else:
        sigma_err = sigma_se = math.nan
    return CoverageRow(cfg.model, profile_text, n, reps_out[0].k, reps_out[0].bias, len(reps_out),
                       cfg.alpha, cfg.rule, cov, se, float(radii.mean()), float(2 * radii.mean()),
                       float(2 * np.median(radii)), sigma_err, sigma_se)


def run_coverage(cfg: ExperimentConfig) -> CoverageReport:
    """Empirical coverage and diameter per (profile, n)."""
    rows = []
    for pi, ptext in enumerate(cfg.profiles):
        for n in cfg.n_grid:
            rows.append(_summarize(cfg, ptext, n, _cell(cfg, pi, ptext, n)))
    return CoverageReport(rows)


@dataclass(frozen=True)
class SlopeFit:
    profile: str
    slope: float
    slope_se: float
    target: float


@dataclass
class RateReport:
    rows: list
    fits: list

    COLUMNS = ("profile", "n", "k", "coverage", "median_diameter", "mean_diameter",
               "floor_rate", "slope", "slope_se", "target_slope")

    def fit(self, profile: str) -> SlopeFit:
        return next(f for f in self.fits if f.profile == profile)

    def to_csv(self) -> str:
        fits = {f.profile: f for f in self.fits}
        out = []
        for r in self.rows:
            f = fits[r.profile]
            out.append([r.profile, r.n, r.k, r.coverage, r.median_diameter, r.mean_diameter,
                        r.floor_rate, f.slope, f.slope_se, f.target])
        return format_csv(self.COLUMNS, out)


@dataclass(frozen=True)
class RateRow:
    profile: str
    n: int
    k: int
    coverage: float
    median_diameter: float
    mean_diameter: float
    floor_rate: float


def fit_slope(ns: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """OLS slope of log(values) on log(ns) with its standard error."""
    res = stats.linregress(np.log(ns), np.log(values))
    return float(res.slope), float(res.stderr)


def run_rates(cfg: ExperimentConfig) -> RateReport:
    """Median diameters over the n grid and their log-log slope per profile."""
    if len(cfg.n_grid) < 2:
        raise ConfigError("a rate fit needs at least two sample sizes")
    sub = cfg.submodel
    rows, fits = [], []
    for pi, ptext in enumerate(cfg.profiles):
        prow = []
        for n in cfg.n_grid:
            row = _summarize(cfg, ptext, n, _cell(cfg, pi, ptext, n))
            prow.append(RateRow(ptext, n, row.k, row.coverage, row.median_diameter,
                                row.mean_diameter, floor_rate(cfg.beta, sub.beta, n)))
        slope, se = fit_slope([r.n for r in prow], [r.median_diameter for r in prow])
        fits.append(SlopeFit(ptext, slope, se, floor_exponent(cfg.beta, sub.beta)))
        rows.extend(prow)
    return RateReport(rows, fits)


@dataclass(frozen=True)
class NormalityRow:
    profile: str
    n: int
    k: int
    reps: int
    errors: str
    ks: float
    mean: float
    var: float
    cheb_exceed: float
    cheb_se: float
    cond35_rate: float

    COLUMNS = ("profile", "n", "k", "reps", "errors", "ks", "mean", "var", "cheb_exceed",
               "cheb_se", "cond35_rate")


@dataclass
class NormalityReport:
    rows: list

    def to_csv(self) -> str:
        cols = NormalityRow.COLUMNS
        return format_csv(cols, [[getattr(r, c) for c in cols] for r in self.rows])


def run_normality(cfg: ExperimentConfig) -> NormalityReport:
    """Law of the standardized statistic at a fixed center (theta_hat = 0).

    The statistic is computed directly on a sample with noise scale ``sigma2``
    (no split), conditioning on the center as the limit theorems do.
    """
    if cfg.model != "sequence":
        raise ConfigError("normality runs are defined for the sequence model only")
    dist = error_family(cfg.errors)
    sigma2 = _raw_sigma2(cfg)
    rows = []
    for pi, ptext in enumerate(cfg.profiles):
        profile = parse_profile(ptext)
        for n in cfg.n_grid:
            for k in cfg.normality_k:
                theta = resolve_theta(profile, cfg, n, k)[:k] if profile.kind != "flat" \
                    else _flat_theta(profile, k)
                center = np.zeros(k)

                def one(rep, theta=theta, n=n, k=k):
                    x = sample_sequence(theta, sigma2, n, k, mix_seed(cfg.master_seed, pi, n, k, rep), dist)
                    return standardized_statistic(x, theta, center, k, dist)

                z = np.array(_map(cfg, one, cfg.reps))
                ks = float(stats.kstest(z, "norm").statistic)
                exceed = float(np.mean(np.abs(z) > 1.0 / math.sqrt(cfg.alpha)))
                cond = float(condition_35_diagnostic(center, theta, k, cfg.eps35))
                rows.append(NormalityRow(ptext, n, k, cfg.reps, cfg.errors, ks, float(z.mean()),
                                         float(z.var(ddof=1)), exceed,
                                         math.sqrt(cfg.alpha * (1 - cfg.alpha) / cfg.reps), cond))
    return NormalityReport(rows)


def _flat_theta(profile: Profile, k: int) -> np.ndarray:
    count, norm = profile.param
    if count in ("sqrt", "all"):
        count = k if count == "all" else max(1, math.isqrt(k))
    count = min(int(count), k)
    theta = np.zeros(k)
    theta[:count] = norm / math.sqrt(count)
    return theta


@dataclass(frozen=True)
class SparseRow:
    profile: str
    n: int
    k: int
    coverage: float
    median_diameter: float
    rate: float
    ratio: float

    COLUMNS = ("profile", "n", "k", "coverage", "median_diameter", "rate", "ratio", "band")


@dataclass
class SparseReport:
    rows: list

    def band(self, profile: str) -> float:
        r = [row.ratio for row in self.rows if row.profile == profile]
        return max(r) / min(r)

    def to_csv(self) -> str:
        out = [[getattr(r, c) for c in SparseRow.COLUMNS[:-1]] + [self.band(r.profile)]
               for r in self.rows]
        return format_csv(SparseRow.COLUMNS, out)


def run_sparse(cfg: ExperimentConfig) -> SparseReport:
    """Finite model R^n with k = n: median diameter against n^{-1/4} per profile."""
    rows = []
    for pi, ptext in enumerate(cfg.profiles):
        for n in cfg.n_grid:
            sub = ExperimentConfig(**{**_asdict(cfg), "L": math.inf, "L1": None, "finite_dim": n,
                                      "k": n, "n_grid": (n,), "beta1": None})
            row = _summarize(sub, ptext, n, _cell(sub, pi, ptext, n))
            rate = n ** -0.25
            rows.append(SparseRow(ptext, n, row.k, row.coverage, row.median_diameter, rate,
                                  row.median_diameter / rate))
    return SparseReport(rows)


def _asdict(cfg: ExperimentConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


@dataclass(frozen=True)
class DualityRow:
    n: int
    beta: float
    L: float
    beta1: float
    L1: float
    eps: float
    reject_rate: float
    accept_rate: float
    floor_rate: float
    ratio: float
    median_diameter: float
    estimator_miss_rate: float
    binomial_se: float

    COLUMNS = ("n", "beta", "L", "beta1", "L1", "eps", "reject_rate", "accept_rate",
               "floor_rate", "ratio", "median_diameter", "estimator_miss_rate", "binomial_se")


@dataclass
class DualityReport:
    rows: list

    def to_csv(self) -> str:
        cols = DualityRow.COLUMNS
        return format_csv(cols, [[getattr(r, c) for c in cols] for r in self.rows])


def run_duality(cfg: ExperimentConfig) -> DualityReport:
    """Error rates of the test and estimator induced by the confidence ball.

    The null point is the first profile; the alternative moves it by
    ``1.05 eps`` along the first coordinate, with ``eps = eps_mult * floor``.
    """
    if cfg.model != "sequence":
        raise ConfigError("duality runs are defined for the sequence model only")
    sub = cfg.submodel
    profile = parse_profile(cfg.profiles[0])
    rows = []
    for n in cfg.n_grid:
        model = _sequence_model(cfg, n)
        K = truncation_length(cfg, n, profile)
        theta1 = resolve_theta(profile, cfg, n, K)
        K = theta1.size
        floor = floor_rate(cfg.beta, sub.beta, n)
        eps = cfg.eps_mult * floor
        alt = theta1.copy()
        alt[0] += 1.05 * eps
        if not model.contains(alt):
            alt = theta1.copy()
            alt[0] -= 1.05 * eps
        if not model.contains(alt):
            raise ConfigError("no alternative at distance > eps inside the model; lower eps_mult")
        problem = TestProblem(theta1, eps, model)

        def one(rep, truth):
            r = replicate_sequence(cfg, truth, n, K, mix_seed(cfg.master_seed, n, rep, truth is alt))
            ball = r.ball
            miss = float(np.linalg.norm(confset_to_estimator(ball) - truth)) > ball.diameter
            return confset_to_test(ball, problem), ball.diameter, miss

        under_alt = _map(cfg, lambda i: one(i, alt), cfg.reps)
        under_null = _map(cfg, lambda i: one(i, theta1), cfg.reps)
        reject = float(np.mean([t for t, _, _ in under_alt]))
        accept = float(np.mean([t for t, _, _ in under_null]))
        med = float(np.median([d for _, d, _ in under_null]))
        miss = float(np.mean([m for _, _, m in under_null + under_alt]))
        se = math.sqrt(cfg.alpha * (1 - cfg.alpha) / cfg.reps)
        rows.append(DualityRow(n, cfg.beta, cfg.L, sub.beta, sub.L, eps, reject, accept, floor,
                               med / floor, med, miss, se))
    return DualityReport(rows)


# ------------------------------------------------------------------------ CSV

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def format_csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()
