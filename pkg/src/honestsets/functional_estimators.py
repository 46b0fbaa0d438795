"""Order-2 U-statistics for the truncated squared distance in density estimation
and random-design regression.

Both estimators have the form

    R = 1/(n(n-1)) sum_{r != s} sum_{i<=k} g_ir g_is,   g_ir = h_i(obs_r) - theta_hat_i,

with ``h_i(x) = e_i(x)`` for densities and ``h_i(x, y) = y e_i(x)`` for
regression. The off-diagonal double sum is evaluated in O(nk) through
``sum_{r != s} g_r g_s = (sum_r g_r)^2 - sum_r g_r^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidArgument
from .norm_estimation import NormEstimate
from .sequence_core import as_sequence, make_rng

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class BasisSpec:
    """Trigonometric basis of L2[0, 1]: 1, sqrt2 cos(2 pi j x), sqrt2 sin(2 pi j x), ..."""

    k_max: int = 4096

    def eval(self, i: int, x: float) -> float:
        return basis_eval(self, i, x)

    def matrix(self, x, k: int) -> np.ndarray:
        """(len(x), k) array with column i-1 holding e_i(x)."""
        if not 1 <= k <= self.k_max:
            raise InvalidArgument(f"basis index range 1..{k} exceeds k_max={self.k_max}")
        x = np.asarray(x, dtype=float).ravel()
        out = np.empty((x.size, k))
        out[:, 0] = 1.0
        if k > 1:
            j = np.arange(1, k // 2 + 1)
            ang = 2.0 * math.pi * np.outer(x, j)
            ncos = k // 2
            nsin = (k - 1) // 2
            out[:, 1:2 * ncos:2] = SQRT2 * np.cos(ang[:, :ncos])
            out[:, 2:2 * nsin + 1:2] = SQRT2 * np.sin(ang[:, :nsin])
        return out


TRIG = BasisSpec()


def basis_eval(spec: BasisSpec, i: int, x: float) -> float:
    """Value of the i-th basis function (1-based) at x in [0, 1]."""
    if not 1 <= i <= spec.k_max:
        raise InvalidArgument(f"basis index {i} outside 1..{spec.k_max}")
    if not 0.0 <= x <= 1.0:
        raise InvalidArgument("basis functions live on [0, 1]")
    if i == 1:
        return 1.0
    j = i // 2
    if i % 2 == 0:
        return SQRT2 * math.cos(2.0 * math.pi * j * x)
    return SQRT2 * math.sin(2.0 * math.pi * j * x)


@dataclass(frozen=True)
class TrigSeries:
    """Finite trigonometric sum ``sum_i coeffs[i-1] e_i``; coefficients are exact."""

    name: str
    coeffs: tuple

    @property
    def length(self) -> int:
        return len(self.coeffs)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return TRIG.matrix(x, self.length) @ np.asarray(self.coeffs)

    @property
    def sup_bound(self) -> float:
        """``|c_1| + sqrt2 * sum_{i>1} |c_i|``, a bound on the sup norm."""
        c = np.abs(np.asarray(self.coeffs))
        return float(c[0] + SQRT2 * c[1:].sum())


def _series(name, pairs):
    top = max(pairs)
    coeffs = [0.0] * top
    for i, v in pairs.items():
        coeffs[i - 1] = v
    return TrigSeries(name, tuple(coeffs))


DENSITIES = {
    "uniform": _series("uniform", {1: 1.0}),
    "bump": _series("bump", {1: 1.0, 2: 0.5}),
    "wave": _series("wave", {1: 1.0, 2: 0.3, 3: -0.2, 6: 0.1}),
    # decaying coefficients 0.25 i^{-2}: smooth, inside S(1, 2)
    "smooth": _series("smooth", {1: 1.0, **{i: 0.25 * i ** -2.0 for i in range(2, 17)}}),
}

REGRESSIONS = {
    "zero": _series("zero", {1: 0.0}),
    "cos1": _series("cos1", {2: 1.0}),
    "mixed": _series("mixed", {1: 0.5, 2: 0.4, 3: -0.3, 5: 0.2}),
    "smooth": _series("smooth", {i: 0.5 * i ** -2.0 for i in range(1, 17)}),
}


def _lookup(table, f_spec) -> TrigSeries:
    if isinstance(f_spec, TrigSeries):
        return f_spec
    if isinstance(f_spec, str) and f_spec.startswith("cosine:"):
        # cosine:j:c -> 1 + c * sqrt2 cos(2 pi j x)
        try:
            _, j, c = f_spec.split(":")
            j, c = int(j), float(c)
        except ValueError:
            raise InvalidArgument(f"bad catalog entry {f_spec!r}") from None
        if table is DENSITIES and abs(c) * SQRT2 >= 1.0:
            raise InvalidArgument("cosine perturbation would make the density negative")
        return _series(f_spec, {1: 1.0 if table is DENSITIES else 0.0, 2 * j: c})
    try:
        return table[f_spec]
    except (KeyError, TypeError):
        raise InvalidArgument(f"unknown catalog function {f_spec!r}") from None


def density_spec(f_spec) -> TrigSeries:
    return _lookup(DENSITIES, f_spec)


def regression_spec(f_spec) -> TrigSeries:
    return _lookup(REGRESSIONS, f_spec)


def true_coeffs(f_spec, k: int, kind: str = "density") -> np.ndarray:
    """First k Fourier coefficients of a catalog function, by orthonormality."""
    series = density_spec(f_spec) if kind == "density" else regression_spec(f_spec)
    return as_sequence(series.coeffs, k)


@dataclass(frozen=True)
class NoiseSpec:
    """Regression errors ``eps = sqrt(var(x)) * z`` with standard normal z."""

    name: str
    intercept: float
    slope: float = 0.0

    def variance(self, x) -> np.ndarray:
        return self.intercept + self.slope * np.asarray(x, dtype=float)

    @property
    def sup(self) -> float:
        return self.intercept + max(self.slope, 0.0)

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        if text == "none":
            return cls("none", 0.0)
        if text == "hetero":
            return cls("hetero", 0.25, 0.5)
        if text.startswith("gaussian:"):
            try:
                v = float(text.split(":", 1)[1])
            except ValueError:
                raise InvalidArgument(f"bad noise spec {text!r}") from None
            return cls(text, v)
        raise InvalidArgument(f"unknown noise spec {text!r}")


@dataclass(frozen=True)
class DensitySample:
    points: np.ndarray
    f_sup: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise InvalidArgument("need at least two observations")
        if np.any((pts < 0) | (pts > 1)):
            raise InvalidArgument("density observations must lie in [0, 1]")
        if self.f_sup < 1.0:
            raise InvalidArgument("a density on [0, 1] has sup norm at least 1")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.size

    def halves(self) -> tuple["DensitySample", "DensitySample"]:
        h = self.n // 2
        return (DensitySample(self.points[:h], self.f_sup),
                DensitySample(self.points[h:], self.f_sup))


@dataclass(frozen=True)
class RegressionSample:
    x: np.ndarray
    y: np.ndarray
    f_sup: float
    sigma2_sup: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size != y.size or x.size < 2:
            raise InvalidArgument("need at least two (x, y) pairs")
        if np.any((x < 0) | (x > 1)):
            raise InvalidArgument("design points must lie in [0, 1]")
        if self.f_sup < 0 or self.sigma2_sup < 0 or self.f_sup ** 2 + self.sigma2_sup <= 0:
            raise InvalidArgument("sup bounds must be nonnegative and not both zero")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def halves(self) -> tuple["RegressionSample", "RegressionSample"]:
        h = self.n // 2
        return (RegressionSample(self.x[:h], self.y[:h], self.f_sup, self.sigma2_sup),
                RegressionSample(self.x[h:], self.y[h:], self.f_sup, self.sigma2_sup))


FunctionalSample = Union[DensitySample, RegressionSample]


def kernel_features(data: FunctionalSample, k: int) -> np.ndarray:
    """(n, k) matrix of ``h_i`` evaluated at each observation."""
    if isinstance(data, DensitySample):
        return TRIG.matrix(data.points, k)
    return data.y[:, None] * TRIG.matrix(data.x, k)


def _offdiag_sum(g: np.ndarray) -> float:
    """``sum_{r != s} sum_i g_ri g_si`` via column sums, compensated per column."""
    total = []
    for col in g.T:
        s = math.fsum(col)
        q = math.fsum(col * col)
        total.append(s * s - q)
    return math.fsum(total)


def u_statistic(g: np.ndarray) -> float:
    n = g.shape[0]
    return _offdiag_sum(g) / (n * (n - 1))


def naive_u_statistic(g: np.ndarray) -> float:
    """Reference O(n^2 k) double sum."""
    n = g.shape[0]
    acc = 0.0
    for r in range(n):
        for s in range(n):
            if r != s:
                acc += float(np.dot(g[r], g[s]))
    return acc / (n * (n - 1))


def _check(data, k):
    if data.n < 2:
        raise InvalidArgument("need n >= 2")
    if k < 1:
        raise InvalidArgument("need k >= 1")


def density_r_kn(data: DensitySample, theta_hat, k: int) -> NormEstimate:
    _check(data, k)
    n = data.n
    g = kernel_features(data, k) - as_sequence(theta_hat, k)
    f = data.f_sup
    a = 2.0 * k * f ** 2 / (n * (n - 1))
    b = 4.0 * f / n
    return NormEstimate(u_statistic(g), a, b, 0.0, k, n)


def regression_r_kn(data: RegressionSample, theta_hat, k: int) -> NormEstimate:
    _check(data, k)
    n = data.n
    g = kernel_features(data, k) - as_sequence(theta_hat, k)
    m = data.f_sup ** 2 + data.sigma2_sup
    a = 2.0 * k * m ** 2 / (n * (n - 1))
    b = 4.0 * m / n
    return NormEstimate(u_statistic(g), a, b, 0.0, k, n)


def functional_r_kn(data: FunctionalSample, theta_hat, k: int) -> NormEstimate:
    if isinstance(data, DensitySample):
        return density_r_kn(data, theta_hat, k)
    return regression_r_kn(data, theta_hat, k)


def hoeffding_parts(data: FunctionalSample, theta, theta_hat, k: int) -> tuple[float, float, float]:
    """Split R into (mean, linear, degenerate) Hoeffding components.

    The three parts add up to R exactly; only the truth ``theta`` separates them.
    """
    _check(data, k)
    n = data.n
    theta = as_sequence(theta, k)
    d = theta - as_sequence(theta_hat, k)
    centered = kernel_features(data, k) - theta
    mean = float(d @ d)
    linear = 2.0 * float(np.mean(centered @ d))
    degenerate = u_statistic(centered)
    return mean, linear, degenerate


def sample_density(f_spec, n: int, seed: int) -> DensitySample:
    """Rejection sampling from the uniform envelope scaled by the sup bound."""
    series = density_spec(f_spec)
    f_sup = max(series.sup_bound, 1.0)
    if 1.0 / f_sup < 0.01:
        raise InvalidArgument("rejection efficiency below 1%")
    rng = make_rng(seed, 3)
    out = np.empty(0)
    while out.size < n:
        m = int(1.2 * (n - out.size) * f_sup) + 16
        x = rng.random(m)
        u = rng.random(m)
        fx = series(x)
        if np.any(fx < -1e-12):
            raise InvalidArgument(f"catalog density {series.name!r} is negative somewhere")
        out = np.concatenate([out, x[u * f_sup <= fx]])
    return DensitySample(out[:n], f_sup)


def sample_regression(f_spec, noise_spec, n: int, seed: int) -> RegressionSample:
    """Uniform design, ``Y = f(X) + sqrt(var(X)) Z`` with Z standard normal."""
    series = regression_spec(f_spec)
    noise = noise_spec if isinstance(noise_spec, NoiseSpec) else NoiseSpec.parse(noise_spec)
    rng = make_rng(seed, 4)
    x = rng.random(n)
    z = rng.standard_normal(n)
    y = series(x) + np.sqrt(noise.variance(x)) * z
    f_sup = series.sup_bound
    if f_sup == 0.0 and noise.sup == 0.0:
        # any upper bound is valid; keep the scale positive
        f_sup = 1.0
    return RegressionSample(x, y, f_sup, noise.sup)
