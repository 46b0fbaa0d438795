"""Parameter spaces, observation models and the randomization split.

The Gaussian sequence model observes ``X_i = theta_i + sqrt(sigma2 / n) eps_i``.
Infinite sequences are stored truncated at a length ``K``; coordinates beyond
``K`` are exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InfeasibleWindow, InvalidArgument
from .norminv import norm_ppf

# stream labels keep noise and split uniforms independent under one seed
NOISE_STREAM = 0
SPLIT_STREAM = 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Seeded generator for an independent labelled stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


def as_sequence(theta, K: Optional[int] = None) -> np.ndarray:
    """Copy ``theta`` to a float array, zero-padded or truncated to length K."""
    arr = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    if K is None:
        return arr.copy()
    out = np.zeros(K)
    m = min(K, arr.size)
    out[:m] = arr[:m]
    return out


def _ceil(x: float) -> int:
    # guards against pow() landing a hair above an exact integer
    return int(math.ceil(x - 1e-9 * max(1.0, abs(x))))


@dataclass(frozen=True)
class Ellipsoid:
    """Sobolev ball ``{theta : sum theta_i^2 i^(2 beta) <= L^2}``.

    ``L = inf`` encodes the unrestricted model (all of R^n when ``finite_dim``
    is set).
    """

    beta: float
    L: float
    finite_dim: Optional[int] = None

    def __post_init__(self):
        if not self.beta > 0 or not self.L > 0:
            raise InvalidArgument("Ellipsoid requires beta > 0 and L > 0")
        if self.finite_dim is not None and self.finite_dim < 1:
            raise InvalidArgument("finite_dim must be a positive count")

    @property
    def unrestricted(self) -> bool:
        return math.isinf(self.L)

    def weights(self, K: int) -> np.ndarray:
        return np.arange(1, K + 1, dtype=float) ** (2.0 * self.beta)

    def energy(self, theta) -> float:
        theta = as_sequence(theta)
        return float(np.sum(theta ** 2 * self.weights(theta.size)))

    def contains(self, theta, rtol: float = 1e-10) -> bool:
        theta = as_sequence(theta)
        if self.finite_dim is not None and np.any(theta[self.finite_dim:] != 0.0):
            return False
        if self.unrestricted:
            return True
        return self.energy(theta) <= self.L ** 2 * (1.0 + rtol)

    def __contains__(self, theta) -> bool:
        return self.contains(theta)


@dataclass(frozen=True)
class ErrorDistribution:
    """Standardized error law with the moments the variance formulas need."""

    kind: str
    var_eps2: float
    cov_eps2_eps: float
    sampler: Callable[[np.random.Generator, int], np.ndarray] = field(repr=False, compare=False)

    @property
    def correlation(self) -> float:
        """Correlation between eps^2 and eps; bounded away from 1."""
        return self.cov_eps2_eps / math.sqrt(self.var_eps2)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.sampler(rng, size)


def _normal(rng, size):
    return rng.standard_normal(size)


def _exponential(rng, size):
    return rng.standard_exponential(size) - 1.0


def _uniform(rng, size):
    return math.sqrt(3.0) * (2.0 * rng.random(size) - 1.0)


def _laplace(rng, size):
    return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size)


STANDARD_NORMAL = ErrorDistribution("standard_normal", 2.0, 0.0, _normal)
ERROR_FAMILIES = {
    "standard_normal": STANDARD_NORMAL,
    # E - 1 with E ~ Exp(1): E eps^3 = 2, E eps^4 = 9
    "exponential": ErrorDistribution("exponential", 8.0, 2.0, _exponential),
    # E eps^4 = 9/5
    "uniform": ErrorDistribution("uniform", 0.8, 0.0, _uniform),
    # E eps^4 = 6
    "laplace": ErrorDistribution("laplace", 5.0, 0.0, _laplace),
}


def error_family(name: str) -> ErrorDistribution:
    try:
        return ERROR_FAMILIES[name]
    except KeyError:
        raise InvalidArgument(f"unknown error family {name!r}") from None


@dataclass(frozen=True)
class SequenceSample:
    """Observed truncated sequence with noise variance ``sigma2 / n`` per coordinate."""

    values: np.ndarray
    n: int
    sigma2: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise InvalidArgument("values must be a nonempty 1-d sequence")
        if self.n < 1 or not self.sigma2 > 0:
            raise InvalidArgument("need n >= 1 and sigma2 > 0")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def K(self) -> int:
        return self.values.size

    @property
    def noise_var(self) -> float:
        return self.sigma2 / self.n


@dataclass(frozen=True)
class SplitPair:
    first: SequenceSample
    second: SequenceSample


def sample_sequence(theta, sigma2: float, n: int, K: int, seed: int,
                    dist: ErrorDistribution = STANDARD_NORMAL) -> SequenceSample:
    """Draw ``X_i = theta_i + sqrt(sigma2/n) eps_i`` for i = 1..K."""
    if not sigma2 > 0 or n < 1 or K < 1:
        raise InvalidArgument("sigma2, n and K must be positive")
    theta = as_sequence(theta, K)
    eps = dist.sample(make_rng(seed, NOISE_STREAM), K)
    return SequenceSample(theta + math.sqrt(sigma2 / n) * eps, n, sigma2)


def _open_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    # (j + 0.5) / 2^53 never hits 0 or 1
    return (rng.integers(0, 2 ** 53, size=size).astype(float) + 0.5) / 2.0 ** 53


def split_randomize(x: SequenceSample, seed: int, uniforms=None) -> SplitPair:
    """Duplicate Gaussian observations at the price of doubling the variance.

    ``first = X + Phi^{-1}(U) sd`` and ``second = X - Phi^{-1}(U) sd`` with
    ``sd = sqrt(sigma2 / n)``; for Gaussian X the two are independent with
    noise scale ``2 sigma2 / n``. ``uniforms`` overrides the generator.
    """
    if uniforms is None:
        u = _open_uniforms(make_rng(seed, SPLIT_STREAM), x.K)
    else:
        u = as_sequence(uniforms)
        if u.size != x.K:
            raise InvalidArgument("need one uniform per coordinate")
    shift = norm_ppf(u) * math.sqrt(x.noise_var)
    s2 = 2.0 * x.sigma2
    return SplitPair(SequenceSample(x.values + shift, x.n, s2),
                     SequenceSample(x.values - shift, x.n, s2))


@dataclass(frozen=True)
class Profile:
    """Shape of a test parameter: ``spike`` (index), ``equal`` (count) or ``geometric`` (ratio)."""

    kind: str
    param: float

    @classmethod
    def parse(cls, text: str) -> "Profile":
        kind, _, arg = text.partition(":")
        aliases = {"spike": "spike", "single_spike": "spike", "equal": "equal",
                   "equal_energy": "equal", "geometric": "geometric", "zero": "zero"}
        if kind not in aliases:
            raise InvalidArgument(f"unknown profile {text!r}")
        kind = aliases[kind]
        if kind == "zero":
            return cls("zero", 0.0)
        try:
            return cls(kind, float(arg))
        except ValueError:
            raise InvalidArgument(f"bad profile parameter in {text!r}") from None

    def __str__(self):
        if self.kind == "zero":
            return "zero"
        p = int(self.param) if self.kind != "geometric" else self.param
        return f"{self.kind}:{p}"


def boundary_theta(model: Ellipsoid, profile: Profile, K: int) -> np.ndarray:
    """Parameter of the given shape placed exactly on the ellipsoid boundary."""
    if model.unrestricted:
        raise InvalidArgument("an unrestricted model has no boundary")
    if model.finite_dim is not None:
        K = min(K, model.finite_dim)
    w = model.weights(K)
    theta = np.zeros(K)
    if profile.kind == "zero":
        return theta
    if profile.kind == "spike":
        i = int(profile.param)
        if not 1 <= i <= K:
            raise InvalidArgument("spike index outside 1..K")
        theta[i - 1] = model.L / math.sqrt(w[i - 1])
    elif profile.kind == "equal":
        k = int(profile.param)
        if not 1 <= k <= K:
            raise InvalidArgument("equal-energy support outside 1..K")
        theta[:k] = model.L / math.sqrt(np.sum(w[:k]))
    elif profile.kind == "geometric":
        rho = profile.param
        if not 0 < rho < 1:
            raise InvalidArgument("geometric ratio must lie in (0, 1)")
        shape = rho ** np.arange(K, dtype=float)
        theta = model.L * shape / math.sqrt(np.sum(shape ** 2 * w))
    else:
        raise InvalidArgument(f"unknown profile kind {profile.kind!r}")
    return theta


def sigma_hat(x: SequenceSample, m: int, l: int) -> float:
    """``(n / l) * sum_{i=m+1}^{m+l} X_i^2``."""
    if m < 0 or l < 1 or m + l > x.K:
        raise InvalidArgument("variance window exceeds the observed coordinates")
    window = x.values[m:m + l]
    return float(x.n / l * np.dot(window, window))


def select_window(beta: float, n: int, finite_dim: Optional[int] = None) -> tuple[int, int]:
    """Window (m, l) for ``sigma_hat`` with l larger than the cut-off by a log factor."""
    if not beta > 0 or n < 2:
        raise InvalidArgument("need beta > 0 and n >= 2")
    if finite_dim is not None and beta <= 0.25:
        raise InfeasibleWindow("finite model needs beta > 1/4 to fit the window")
    rate = n ** (1.0 / (2.0 * beta + 0.5))
    m = _ceil(rate)
    l = _ceil(rate * math.log(n))
    if finite_dim is not None:
        l = min(l, finite_dim - m)
        if l <= 0:
            raise InfeasibleWindow("window does not fit inside finite_dim")
    return m, l
