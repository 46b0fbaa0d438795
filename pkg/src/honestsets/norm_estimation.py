"""Unbiased estimation of the truncated squared distance ``||theta - theta_hat||^2``.

In the sequence model

    R = sum_{i<=k} (X_i - theta_hat_i)^2 - k sigma2 / n

has mean ``s2 = sum_{i<=k} (theta_i - theta_hat_i)^2`` and variance
``a + b s2 + c s1`` with ``s1 = sum_{i<=k} (theta_i - theta_hat_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument
from .norminv import norm_ppf
from .sequence_core import (STANDARD_NORMAL, ErrorDistribution, SequenceSample,
                            as_sequence, make_rng)


@dataclass(frozen=True)
class NormEstimate:
    """Estimate ``r`` of the truncated squared distance with its scale components.

    The plug-in variance is ``a + b*s2 + c*s1``; ``corr`` is the correlation
    bound between eps^2 and eps used to keep it positive.
    """

    r: float
    a: float
    b: float
    c: float
    k: int
    n: int
    corr: float = 0.0

    def tau2(self, s2: float, s1: float = 0.0) -> float:
        raw = self.a + self.b * s2 + self.c * s1
        floor = (1.0 - self.corr) * (self.a + self.b * s2)
        return max(raw, floor)

    def tau(self, s2: float, s1: float = 0.0) -> float:
        return math.sqrt(self.tau2(s2, s1))

    def tau_clamped(self, s2: float, s1: float = 0.0) -> bool:
        """True when ``a + b*s2 + c*s1`` fell below the positivity floor."""
        return self.a + self.b * s2 + self.c * s1 < (1.0 - self.corr) * (self.a + self.b * s2)

    def radius_components(self) -> tuple[float, float]:
        """Coefficients (a', b') with ``tau^2 <= a' + b' x^2`` whenever ``s2 <= x^2``.

        The cross term obeys ``|c s1| <= |c| sqrt(k) x <= b x^2 + c^2 k / (4b)``.
        """
        if self.c == 0.0:
            return self.a, self.b
        return self.a + self.c ** 2 * self.k / (4.0 * self.b), 2.0 * self.b


def nonnormal_variance_components(dist: ErrorDistribution, k: int, n: int,
                                  sigma2: float) -> tuple[float, float, float]:
    """Variance coefficients (a, b, c) of R for a standardized error law."""
    if k < 1 or n < 1 or not sigma2 > 0:
        raise InvalidArgument("need k >= 1, n >= 1 and sigma2 > 0")
    if dist.var_eps2 is None or dist.cov_eps2_eps is None:
        raise InvalidArgument("error law lacks fourth-moment metadata")
    a = k * sigma2 ** 2 * dist.var_eps2 / n ** 2
    b = 4.0 * sigma2 / n
    c = 4.0 * sigma2 ** 1.5 * dist.cov_eps2_eps / (n * math.sqrt(n))
    return a, b, c


def r_kn(x: SequenceSample, theta_hat, k: int, sigma2: Optional[float] = None,
         dist: ErrorDistribution = STANDARD_NORMAL) -> NormEstimate:
    """Residual-sum-of-squares estimate of ``sum_{i<=k} (theta_i - theta_hat_i)^2``.

    ``sigma2`` overrides the sample's noise scale, e.g. with a plug-in estimate.
    """
    if not 1 <= k <= x.K:
        raise InvalidArgument(f"cut-off k={k} outside 1..{x.K}")
    s2 = x.sigma2 if sigma2 is None else float(sigma2)
    if not s2 > 0:
        raise InvalidArgument("sigma2 must be positive")
    resid = x.values[:k] - as_sequence(theta_hat, k)
    r = float(np.dot(resid, resid)) - k * s2 / x.n
    a, b, c = nonnormal_variance_components(dist, k, x.n, s2)
    return NormEstimate(r, a, b, c, k, x.n, corr=max(dist.correlation, 0.0))


def tau_plugin(est: NormEstimate, s2: float, s1: float = 0.0) -> float:
    """Scale ``sqrt(a + b*s2 + c*s1)``, clamped at the positivity floor."""
    if s2 < 0:
        raise InvalidArgument("s2 is a squared norm and cannot be negative")
    return est.tau(s2, s1)


def residual_moments(theta, theta_hat, k: int) -> tuple[float, float]:
    """``(sum d_i^2, sum d_i)`` over i <= k with ``d = theta - theta_hat``."""
    d = as_sequence(theta, k) - as_sequence(theta_hat, k)
    return float(np.dot(d, d)), float(np.sum(d))


def standardized_statistic(x: SequenceSample, theta, theta_hat, k: int,
                           dist: ErrorDistribution = STANDARD_NORMAL,
                           sigma2: Optional[float] = None) -> float:
    """``(R - s2) / tau`` evaluated at the true parameter (simulation use)."""
    est = r_kn(x, theta_hat, k, sigma2=sigma2, dist=dist)
    s2, s1 = residual_moments(theta, theta_hat, k)
    return (est.r - s2) / est.tau(s2, s1)


@dataclass(frozen=True)
class QuantileRule:
    """How the critical value z is obtained.

    ``mode`` is ``normal``, ``chebyshev`` or ``simulated``. The simulated mode
    evaluates the exact law of the standardized statistic at ``theta_ref``
    (the center when left unset).
    """

    mode: str
    alpha: float
    theta_ref: Optional[tuple] = None
    reps: int = 4000
    seed: int = 0
    two_sided: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgument("alpha must lie in (0, 1)")
        if self.mode not in ("normal", "chebyshev", "simulated"):
            raise InvalidArgument(f"unknown quantile mode {self.mode!r}")
        if self.mode == "simulated" and self.reps < 1000:
            raise InvalidArgument("simulated quantiles need at least 1000 draws")


@dataclass(frozen=True)
class SimulationContext:
    """Everything the exact simulation needs besides the rule itself."""

    theta_hat: np.ndarray
    k: int
    n: int
    sigma2: float
    dist: ErrorDistribution = STANDARD_NORMAL


def simulate_statistic(theta, ctx: SimulationContext, reps: int, seed: int) -> np.ndarray:
    """Draws of ``sum A (eps_i^2 - 1) + sum B_i eps_i``, the exact standardized law."""
    k, n, s2 = ctx.k, ctx.n, ctx.sigma2
    d = as_sequence(theta, k) - as_sequence(ctx.theta_hat, k)
    a, b, c = nonnormal_variance_components(ctx.dist, k, n, s2)
    est = NormEstimate(0.0, a, b, c, k, n, corr=max(ctx.dist.correlation, 0.0))
    tau = est.tau(float(d @ d), float(d.sum()))
    rng = make_rng(seed, 7)
    eps = ctx.dist.sample(rng, reps * k).reshape(reps, k)
    A = s2 / (n * tau)
    B = 2.0 * math.sqrt(s2) * d / (math.sqrt(n) * tau)
    return A * np.sum(eps ** 2 - 1.0, axis=1) + eps @ B


def quantile(rule: QuantileRule, context: Optional[SimulationContext] = None) -> float:
    """Critical value z for the rule's level."""
    alpha = rule.alpha
    if rule.mode == "normal":
        return norm_ppf(1.0 - alpha / 2.0) if rule.two_sided else norm_ppf(1.0 - alpha)
    if rule.mode == "chebyshev":
        return math.sqrt(1.0 / alpha)
    if context is None:
        raise InvalidArgument("simulated quantiles need a simulation context")
    theta_ref = context.theta_hat if rule.theta_ref is None else np.asarray(rule.theta_ref)
    draws = np.sort(simulate_statistic(theta_ref, context, rule.reps, rule.seed))
    if rule.two_sided:
        absd = np.sort(np.abs(draws))
        j = math.ceil(rule.reps * (1.0 - alpha))
        return float(absd[j - 1])
    # lower-tail order statistic at index ceil(reps * alpha), 1-based
    j = max(1, math.ceil(rule.reps * alpha))
    return float(-draws[j - 1])
