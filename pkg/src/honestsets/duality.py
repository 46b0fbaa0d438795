"""Tests and estimators induced by a confidence ball.

A ball lying strictly inside the closed eps-ball around ``theta1`` is at
positive distance from every parameter farther than eps from ``theta1``; that
is the rejection event of the induced test. Equality counts as no rejection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .confidence_set import ConfidenceBall
from .errors import InvalidArgument
from .sequence_core import Ellipsoid, as_sequence


@dataclass(frozen=True)
class TestProblem:
    """Point null ``theta1`` against alternatives farther than ``eps``."""

    __test__ = False  # not a pytest class

    theta1: np.ndarray
    eps: float
    model: Ellipsoid

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidArgument("separation eps must be positive")
        if not self.model.contains(self.theta1):
            raise InvalidArgument("theta1 must belong to the model")


def confset_to_test(ball: ConfidenceBall, problem: TestProblem) -> int:
    """1 when the ball sits strictly inside the eps-ball around theta1, else 0."""
    K = max(ball.center.size, np.size(problem.theta1))
    gap = float(np.linalg.norm(as_sequence(ball.center, K) - as_sequence(problem.theta1, K)))
    return int(gap + ball.radius < problem.eps)


def confset_to_estimator(ball: ConfidenceBall) -> np.ndarray:
    """A point of the set: its center. Check ``ball.empty`` for the degenerate case."""
    return ball.center


def floor_rate(beta: float, beta1: float, n: float) -> float:
    """``max(n^{-beta1/(2 beta1 + 1)}, n^{-beta/(2 beta + 1/2)})``; beta = 0 gives 1."""
    if beta < 0 or beta1 < beta:
        raise InvalidArgument("need 0 <= beta <= beta1")
    est = n ** (-beta1 / (2.0 * beta1 + 1.0))
    test = n ** (-beta / (2.0 * beta + 0.5))
    return max(est, test)


def floor_exponent(beta: float, beta1: float) -> float:
    """Log-log slope of ``floor_rate`` in n."""
    return -min(beta1 / (2.0 * beta1 + 1.0), beta / (2.0 * beta + 0.5))


@dataclass(frozen=True)
class FloorRow:
    n: int
    median_diameter: float
    floor: float

    @property
    def ratio(self) -> float:
        return self.median_diameter / self.floor


def diameter_floor_report(model: Ellipsoid, submodel: Ellipsoid, n_grid: Sequence[int],
                          config=None) -> list[FloorRow]:
    """Median diameter on the submodel against the theoretical floor, per n.

    ``config`` is an ``ExperimentConfig``; its supermodel/submodel are
    overridden by the arguments. Without one, only floors are tabulated
    (median diameters are NaN).
    """
    if submodel.beta < model.beta or submodel.L > model.L:
        raise InvalidArgument("submodel must be nested in the model (beta1 >= beta, L1 <= L)")
    if config is None:
        return [FloorRow(int(n), math.nan, floor_rate(model.beta, submodel.beta, n))
                for n in n_grid]
    from .harness import run_rates
    from dataclasses import replace
    cfg = replace(config, beta=model.beta, L=model.L, finite_dim=model.finite_dim,
                  beta1=submodel.beta, L1=submodel.L, n_grid=tuple(int(n) for n in n_grid))
    report = run_rates(cfg)
    rows = []
    for row in report.rows:
        rows.append(FloorRow(row.n, row.median_diameter,
                             floor_rate(model.beta, submodel.beta, row.n)))
    return rows
