"""Sign-flip witnesses: a positive marginal effect that makes the estimand negative.

If the weight is negative on a set of positive length, a marginal effect
that is tiny everywhere except for a tall smooth bump inside that set
drives ``integral of omega * g'`` below zero.  If the weight is nonnegative
almost everywhere no positive ``g'`` can do that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT
from .expr import parse_expr
from .funcspec import RealFn
from .intervals import Interval, IntervalSet
from .link import beta
from .numerics import QuadratureResult, integrate
from .partition import SignPartition

CORE_FRACTION = 0.6  # share of the chosen component covered by the bump
SAFETY_FACTOR = 2.0

BUMP = "exp(1 - 1/(1 - ((x - c)/h)^2))"  # peak 1 at c, vanishes smoothly at c +- h


@dataclass(frozen=True)
class BumpSpec:
    center: float
    half_width: float
    epsilon: float
    amplitude: float

    def __post_init__(self):
        if self.half_width <= 0 or self.epsilon <= 0 or self.amplitude < 0:
            raise ValueError("bump needs half_width > 0, epsilon > 0 and amplitude >= 0")

    @property
    def support(self) -> Interval:
        return Interval(self.center - self.half_width, self.center + self.half_width, False, False)

    def bump(self) -> RealFn:
        """The unit bump ``B`` on the real line (zero off its support)."""
        return self._with(0.0, 1.0)

    def g_prime(self) -> RealFn:
        """``epsilon + amplitude * B(x)`` as a three-piece function."""
        return self._with(self.epsilon, self.amplitude)

    def _with(self, eps, amp) -> RealFn:
        params = {"c": self.center, "h": self.half_width, "eps": eps, "M": amp}
        lo, hi = self.center - self.half_width, self.center + self.half_width
        floor = parse_expr("eps", params)
        return RealFn([
            (Interval(-math.inf, lo, False, True), floor),
            (Interval(lo, hi, False, False), parse_expr(f"eps + M*{BUMP}", params)),
            (Interval(hi, math.inf, True, False), floor),
        ])

    def to_json(self):
        return {
            "center": self.center,
            "half_width": self.half_width,
            "epsilon": self.epsilon,
            "amplitude": self.amplitude,
        }


@dataclass(frozen=True)
class SignFlip:
    spec: BumpSpec
    g_prime: RealFn
    achieved_beta: QuadratureResult
    component: Interval
    weight_mass: QuadratureResult  # integral of omega over the domain
    bump_mass: QuadratureResult  # integral of omega * B

    feasible = True

    def to_json(self):
        out = self.spec.to_json()
        out["achieved_beta"] = self.achieved_beta.value
        return out


@dataclass(frozen=True)
class Infeasible:
    reason: str
    epsilon: float
    beta_lower_bound: float  # epsilon * integral of omega, valid for any g' >= epsilon

    feasible = False

    def to_json(self):
        return {"infeasible": True, "reason": self.reason, "epsilon": self.epsilon,
                "beta_lower_bound": self.beta_lower_bound}


def find_sign_flip(
    omega: RealFn,
    part: SignPartition,
    eps: float = 0.01,
    tol: float = DEFAULT.quad_tol,
):
    """A smooth ``g' >= eps`` with negative estimand, or :class:`Infeasible`.

    The bump sits on the middle 60% of the component of ``X^-`` carrying
    the most negative weight.  With ``W = integral of omega`` and
    ``V = integral of omega * B`` the estimand is ``eps * W + M * V``; the
    amplitude is twice the ``M`` that makes this zero.
    """
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    X = part.domain
    mass = beta(omega, None, X, tol)
    comps = [iv for iv in part.x_minus if iv.length > 0]
    if not comps:
        return Infeasible("weight is nonnegative almost everywhere", eps, eps * mass.value)
    masses = [integrate(omega, IntervalSet([iv]), tol, omega.breakpoints).value for iv in comps]
    comp = comps[int(np.argmin(masses))]
    spec = BumpSpec(comp.midpoint, 0.5 * CORE_FRACTION * comp.length, eps, 1.0)
    bump = spec.bump()
    v = beta(omega, bump, IntervalSet([spec.support]), tol)
    if not v.value < 0:
        raise AssertionError(f"bump mass {v.value} is not negative inside X-")
    amplitude = SAFETY_FACTOR * max(0.0, -eps * mass.value / v.value)
    if amplitude == 0.0:
        amplitude = 1.0  # the floor alone already gives a negative estimand
    spec = BumpSpec(spec.center, spec.half_width, eps, amplitude)
    g_adv = spec.g_prime()
    achieved = beta(omega, g_adv, X, tol)
    return SignFlip(spec, g_adv, achieved, comp, mass, v)
