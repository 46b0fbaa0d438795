"""Honest confidence balls around an arbitrary center.

The exact set is

    {theta in model : ||theta - center|| <= sqrt(z tau(theta) + r) + 2 B_k}

with ``sqrt(x) := 0`` for negative x. Because ``tau`` depends on theta the set
is not a ball; ``solve_radius`` returns the smallest centered ball containing
the feasible distances, which is what diameters and the duality reductions use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InfeasibleCutoff, InvalidArgument
from .functional_estimators import DensitySample, RegressionSample, functional_r_kn
from .norm_estimation import (NormEstimate, QuantileRule, SimulationContext, quantile,
                              r_kn, residual_moments)
from .sequence_core import (STANDARD_NORMAL, Ellipsoid, ErrorDistribution, SequenceSample,
                            _ceil, as_sequence, select_window, sigma_hat)

RADIUS_TOL = 1e-10


@dataclass(frozen=True)
class CutoffPlan:
    k: int
    B_k: float
    beta: float
    L: float


def cutoff(model: Ellipsoid, n: int, k: Optional[int] = None) -> CutoffPlan:
    """Cut-off balancing ``k^{1/4}/sqrt(n)`` against the bias ``L / k^beta``.

    An explicit ``k`` overrides the rate; ``B_k`` is 0 once k covers a finite model.
    """
    if n < 1:
        raise InvalidArgument("n must be positive")
    fd = model.finite_dim
    if k is None:
        if model.unrestricted:
            if fd is None:
                raise InfeasibleCutoff("an unrestricted infinite model has no finite cut-off")
            k = fd
        else:
            if fd is not None and model.beta < 0.25:
                raise InfeasibleCutoff("finite model needs beta >= 1/4 for k <= n")
            rate = model.L ** (4.0 / (4.0 * model.beta + 1.0)) * n ** (1.0 / (2.0 * model.beta + 0.5))
            k = max(1, _ceil(rate))
            if fd is not None:
                k = min(k, fd)
    elif k < 1:
        raise InvalidArgument("cut-off must be at least 1")
    if fd is not None and k >= fd:
        bias = 0.0
    elif model.unrestricted:
        raise InfeasibleCutoff("an unrestricted model needs k = finite_dim")
    else:
        bias = model.L / k ** model.beta
    return CutoffPlan(int(k), bias, model.beta, model.L)


def radius_envelope(r_hat: NormEstimate, z: float, B_k: float) -> tuple[float, float]:
    """(quadratic-root bound, cruder ``2B' + 2A^2`` bound) on the enclosing radius.

    From ``x <= B' + A sqrt(x)`` with ``B' = sqrt(z sqrt(a) + r+) + 2 B_k`` and
    ``A = sqrt(z) b^{1/4}``.
    """
    a, b = r_hat.radius_components()
    Bp = math.sqrt(max(z * math.sqrt(a), 0.0) + max(r_hat.r, 0.0)) + 2.0 * B_k
    A = math.sqrt(max(z, 0.0)) * b ** 0.25
    root = ((A + math.sqrt(A * A + 4.0 * Bp)) / 2.0) ** 2
    return root, 2.0 * Bp + 2.0 * A * A


def _bisect_last(pred, lo: float, hi: float) -> float:
    """Largest x in [lo, hi] with pred(x), given pred holds on [lo, t] only."""
    for _ in range(300):
        if hi - lo <= RADIUS_TOL * 0.01:
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def solve_radius(r_hat: NormEstimate, z: float, B_k: float, floor: bool = False) -> float:
    """Largest x >= 0 with ``x <= sqrt(max(z sqrt(a + b x^2) + r, 0)) + 2 B_k``.

    Writing ``q(x) = (x - 2B)^2 - z sqrt(a + b x^2) - r`` for x > 2B, a point is
    feasible iff ``q <= 0``. ``q`` is concave then convex (one inflection), so
    the last feasible point is found by locating the convex minimum and
    bisecting; the concave piece is searched only if the convex one is empty.
    """
    if z < 0 or B_k < 0:
        raise InvalidArgument("z and B_k must be nonnegative")
    a, b = r_hat.radius_components()
    r = r_hat.r
    twoB = 2.0 * B_k

    def q(x):
        return (x - twoB) ** 2 - z * math.sqrt(a + b * x * x) - r

    def dq(x):
        return 2.0 * (x - twoB) - z * b * x / math.sqrt(a + b * x * x)

    if z == 0.0 or b == 0.0:
        x = twoB + math.sqrt(max(z * math.sqrt(a) + r, 0.0))
    else:
        env, _ = radius_envelope(r_hat, z, B_k)
        hi = env * (1.0 + 1e-12) + 1e-15
        t = (z * a * b / 2.0) ** (2.0 / 3.0) - a
        x_inf = math.sqrt(t / b) if t > 0 else 0.0
        left = max(twoB, x_inf)
        x = None
        if left < hi:
            # minimum of the convex piece: dq is increasing there
            if dq(left) >= 0.0:
                xmin = left
            elif dq(hi) <= 0.0:
                xmin = hi
            else:
                xmin = _bisect_last(lambda u: dq(u) < 0.0, left, hi)
            if q(xmin) <= 0.0:
                x = _bisect_last(lambda u: q(u) <= 0.0, xmin, hi)
        if x is None:
            right = min(x_inf, hi)
            if twoB < right and q(twoB) <= 0.0:
                x = _bisect_last(lambda u: q(u) <= 0.0, twoB, right)
            else:
                x = twoB
    if floor:
        x = max(x, math.sqrt(max(z * math.sqrt(r_hat.a), 0.0)))
    return x


@dataclass(frozen=True)
class ConfidenceBall:
    """Confidence set with its exact membership rule and an enclosing radius."""

    center: np.ndarray
    radius: float
    k: int
    bias: float
    z: float
    r_hat: NormEstimate
    model: Ellipsoid
    floor_applied: bool = False
    sigma2_used: Optional[float] = None

    def threshold(self, theta) -> float:
        """Right-hand side of the membership inequality at theta."""
        s2, s1 = residual_moments(theta, self.center, self.k)
        inner = self.z * self.r_hat.tau(s2, s1) + self.r_hat.r
        rhs = math.sqrt(max(inner, 0.0)) + 2.0 * self.bias
        if self.floor_applied:
            rhs = max(rhs, math.sqrt(max(self.z * math.sqrt(self.r_hat.a), 0.0)))
        return rhs

    def contains(self, theta) -> bool:
        return contains(self, theta)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def empty(self) -> bool:
        """True when the center itself fails membership and the radius is 0."""
        return self.radius == 0.0 and not self.contains(self.center)

    def to_record(self, max_coords: Optional[int] = None) -> dict:
        c = self.center if max_coords is None else self.center[:max_coords]
        rec = {
            "radius": self.radius,
            "diameter": self.diameter,
            "k": self.k,
            "bias": self.bias,
            "z": self.z,
            "r_hat": self.r_hat.r,
            "tau0": math.sqrt(self.r_hat.a),
            "floor_applied": int(self.floor_applied),
            "sigma2": self.sigma2_used if self.sigma2_used is not None else float("nan"),
        }
        for i, v in enumerate(c, start=1):
            rec[f"center_{i}"] = float(v)
        return rec


def contains(ball: ConfidenceBall, theta) -> bool:
    """Exact membership: theta in the model and within the theta-dependent radius."""
    theta = as_sequence(theta)
    if not ball.model.contains(theta):
        return False
    K = max(theta.size, ball.center.size)
    dist = float(np.linalg.norm(as_sequence(theta, K) - as_sequence(ball.center, K)))
    return dist <= ball.threshold(theta)


def diameter(ball: ConfidenceBall) -> float:
    return ball.diameter


@dataclass(frozen=True)
class SigmaSource:
    """``known`` uses the sample's own noise scale; ``estimated`` plugs in sigma_hat."""

    kind: str = "known"
    value: Optional[float] = None
    m: Optional[int] = None
    l: Optional[int] = None

    @classmethod
    def parse(cls, text: str) -> "SigmaSource":
        kind, _, arg = text.partition(":")
        try:
            if kind == "known":
                return cls("known", float(arg) if arg else None)
            if kind == "estimated":
                if not arg:
                    return cls("estimated")
                m, l = (int(v) for v in arg.split(","))
                return cls("estimated", m=m, l=l)
        except ValueError:
            pass
        raise InvalidArgument(f"bad sigma source {text!r}")


Sample = Union[SequenceSample, DensitySample, RegressionSample]


def build_ball(second: Sample, theta_hat, model: Ellipsoid, alpha: float,
               rule: QuantileRule, sigma_source: Optional[SigmaSource] = None,
               dist: ErrorDistribution = STANDARD_NORMAL, k: Optional[int] = None,
               floor: bool = False) -> ConfidenceBall:
    """Confidence ball from data independent of ``theta_hat``."""
    if rule.alpha != alpha:
        rule = QuantileRule(rule.mode, alpha, rule.theta_ref, rule.reps, rule.seed, rule.two_sided)
    plan = cutoff(model, second.n, k)
    sigma2 = None
    if isinstance(second, SequenceSample):
        if plan.k > second.K:
            raise InvalidArgument(f"cut-off {plan.k} exceeds the {second.K} observed coordinates")
        src = sigma_source or SigmaSource()
        if src.kind == "estimated":
            if src.m is None:
                m, l = select_window(model.beta, second.n, model.finite_dim)
            else:
                m, l = src.m, src.l
            sigma2 = sigma_hat(second, m, l)
            if not sigma2 > 0:
                raise InvalidArgument("variance estimate is not positive")
        elif src.value is not None:
            sigma2 = float(src.value)
        est = r_kn(second, theta_hat, plan.k, sigma2=sigma2, dist=dist)
        sigma2 = second.sigma2 if sigma2 is None else sigma2
        ctx = SimulationContext(as_sequence(theta_hat, plan.k), plan.k, second.n, sigma2, dist)
    else:
        est = functional_r_kn(second, theta_hat, plan.k)
        ctx = None
        if rule.mode == "simulated":
            raise InvalidArgument("exact simulation is only available in the sequence model")
    z = quantile(rule, ctx)
    radius = solve_radius(est, z, plan.B_k, floor=floor)
    return ConfidenceBall(as_sequence(theta_hat), radius, plan.k, plan.B_k, z, est, model,
                          floor_applied=floor, sigma2_used=sigma2)
