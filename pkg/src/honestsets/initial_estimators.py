"""Centering estimators built from the first half of the data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidArgument
from .functional_estimators import FunctionalSample, kernel_features
from .sequence_core import Ellipsoid, SequenceSample, as_sequence


@dataclass(frozen=True)
class CenterEstimate:
    theta_hat: np.ndarray
    k_used: int
    projected: bool = False


def projection_estimator(first: SequenceSample, k: int) -> CenterEstimate:
    """Keep the first k observations, zero the rest."""
    if not 1 <= k <= first.K:
        raise InvalidArgument(f"truncation level {k} outside 1..{first.K}")
    theta_hat = np.zeros(first.K)
    theta_hat[:k] = first.values[:k]
    return CenterEstimate(theta_hat, k)


def unbiased_risk(values, noise_var) -> np.ndarray:
    """URE(k) for k = 1..K: ``sum_{i<=k} v_i + sum_{i>k} (X_i^2 - v_i)``.

    ``noise_var`` is a scalar or a per-coordinate array.
    """
    x = np.asarray(values, dtype=float)
    v = np.broadcast_to(np.asarray(noise_var, dtype=float), x.shape)
    head = np.cumsum(v)
    tail_terms = x ** 2 - v
    # tail[k-1] = sum_{i>k} tail_terms_i
    tail = np.concatenate([np.cumsum(tail_terms[::-1])[::-1][1:], [0.0]])
    return head + tail


def _select(values, noise_var, k_grid) -> int:
    grid = sorted({int(k) for k in k_grid})
    if not grid:
        raise InvalidArgument("empty truncation grid")
    K = len(values)
    if grid[0] < 1 or grid[-1] > K:
        raise InvalidArgument(f"truncation grid must lie inside 1..{K}")
    ure = unbiased_risk(values, noise_var)
    scores = ure[np.asarray(grid) - 1]
    # argmin returns the first minimizer, i.e. the smallest k on ties
    return grid[int(np.argmin(scores))]


def adaptive_estimator(first: SequenceSample, k_grid: Optional[Iterable[int]] = None) -> CenterEstimate:
    """Truncation estimator at the URE-minimizing level over ``k_grid`` (default 1..K)."""
    grid = range(1, first.K + 1) if k_grid is None else k_grid
    k = _select(first.values, first.noise_var, grid)
    return projection_estimator(first, k)


def empirical_coefficients(data: FunctionalSample, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Unbiased coefficient estimates ``mean_r h_i(obs_r)`` and their variances."""
    g = kernel_features(data, K)
    mean = g.mean(axis=0)
    var = g.var(axis=0, ddof=1) / data.n
    return mean, var


def functional_estimator(first: FunctionalSample, K: int,
                         k_grid: Optional[Iterable[int]] = None) -> CenterEstimate:
    """URE truncation of the empirical Fourier coefficients (density or regression)."""
    mean, var = empirical_coefficients(first, K)
    grid = range(1, K + 1) if k_grid is None else k_grid
    k = _select(mean, var, grid)
    theta_hat = np.zeros(K)
    theta_hat[:k] = mean[:k]
    return CenterEstimate(theta_hat, k)


def project_to_ellipsoid(theta_hat, model: Ellipsoid, tol: float = 1e-10) -> np.ndarray:
    """Euclidean projection onto ``{sum w_i theta_i^2 <= L^2}``, ``w_i = i^(2 beta)``.

    The minimizer is ``theta_i / (1 + lam w_i)`` with ``lam >= 0`` chosen so the
    constraint binds; ``lam`` is found by bisection on the (decreasing) energy.
    """
    theta = as_sequence(theta_hat)
    if model.finite_dim is not None and theta.size > model.finite_dim:
        theta = theta.copy()
        theta[model.finite_dim:] = 0.0
    if model.contains(theta, rtol=0.0):
        return theta
    w = model.weights(theta.size)
    L2 = model.L ** 2

    def energy(lam):
        return float(np.sum(w * (theta / (1.0 + lam * w)) ** 2))

    lo, hi = 0.0, 1.0
    while energy(hi) > L2:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if energy(mid) > L2:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(hi, 1e-300):
            break
    # hi is on the feasible side
    return theta / (1.0 + hi * w)


def center_estimate(first, model: Ellipsoid, choice: str = "adaptive", project: bool = True,
                    K: Optional[int] = None) -> CenterEstimate:
    """Build the center for any model: ``adaptive`` or ``projection:<k>``."""
    kind, _, arg = choice.partition(":")
    if isinstance(first, SequenceSample):
        if kind == "adaptive":
            est = adaptive_estimator(first)
        elif kind == "projection":
            est = projection_estimator(first, int(arg))
        else:
            raise InvalidArgument(f"unknown estimator {choice!r}")
    else:
        K = K or 64
        if kind == "adaptive":
            est = functional_estimator(first, K)
        elif kind == "projection":
            est = functional_estimator(first, K, k_grid=[int(arg)])
        else:
            raise InvalidArgument(f"unknown estimator {choice!r}")
    if project:
        return CenterEstimate(project_to_ellipsoid(est.theta_hat, model), est.k_used, True)
    return est


def condition_35_diagnostic(theta_hat, theta, k: int, eps: float) -> bool:
    """``max_{i<=k} d_i^2 <= eps * sum_{i<=k} d_i^2`` with ``d = theta_hat - theta``."""
    d = as_sequence(theta_hat, k) - as_sequence(theta, k)
    d2 = d ** 2
    total = float(d2.sum())
    peak = float(d2.max())
    if total == 0.0:
        return peak == 0.0
    return peak <= eps * total
