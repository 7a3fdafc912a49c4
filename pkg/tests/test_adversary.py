import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from salvage.adversary import BumpSpec, Infeasible, SignFlip, find_sign_flip
from salvage.dominance import VIOLATED, salvage_dominance
from salvage.funcspec import parse
from salvage.intervals import IntervalSet
from salvage.partition import partition_signs


def bump_g(x, spec):
    """The adversarial g' written out directly in numpy."""
    u = (np.asarray(x) - spec.center) / spec.half_width
    inside = np.abs(u) < 1
    b = np.zeros_like(u)
    b[inside] = np.exp(1 - 1 / (1 - u[inside] ** 2))
    return spec.epsilon + spec.amplitude * b


def midpoint_beta(omega, spec, lo, hi, points=2**20):
    h = (hi - lo) / points
    x = lo + (np.arange(points) + 0.5) * h
    return float(np.sum(omega(x) * bump_g(x, spec)) * h)


def test_first_example_sign_flip():
    omega = parse("x - 1")
    X = IntervalSet.of(0, 3)
    res = find_sign_flip(omega, partition_signs(omega, X), eps=0.01)
    assert isinstance(res, SignFlip) and res.feasible
    assert res.spec.center == 0.5 and res.spec.half_width == pytest.approx(0.3)
    xs = np.linspace(0, 3, 10001)
    assert res.g_prime(xs).min() >= 0.01
    assert midpoint_beta(omega, res.spec, 0, 3) < 0
    assert res.achieved_beta.value == pytest.approx(midpoint_beta(omega, res.spec, 0, 3), abs=1e-8)


def test_package_g_matches_hand_written_bump():
    spec = BumpSpec(0.5, 0.3, 0.01, 2.5)
    xs = np.linspace(-1, 2, 3001)
    np.testing.assert_allclose(spec.g_prime()(xs), bump_g(xs, spec), atol=1e-15)
    assert spec.bump()(0.5) == 1.0
    # smooth at the edge of the support: values approach the floor
    assert spec.g_prime()(0.8 - 1e-6) == pytest.approx(0.01, abs=1e-12)


@pytest.mark.parametrize("text, lo, hi", [("phi(x)", -5, 5), ("1 + x^2", -1, 1), ("x^2", -1, 1)])
def test_nonnegative_weights_are_infeasible(text, lo, hi):
    omega = parse(text)
    res = find_sign_flip(omega, partition_signs(omega, IntervalSet.of(lo, hi)))
    assert isinstance(res, Infeasible) and not res.feasible
    assert res.beta_lower_bound >= 0


def test_gaussian_flip_uses_the_negative_tail():
    omega = parse("(1 + z*x)*phi(x)", {"z": 2})
    part = partition_signs(omega, IntervalSet.of(-math.inf, math.inf))
    res = find_sign_flip(omega, part, eps=0.01)
    assert res.feasible
    assert res.component.hi == -0.5
    assert res.achieved_beta.value < 0


def test_adversarial_effect_breaks_dominance():
    omega = parse("x - 1")
    X = IntervalSet.of(0, 3)
    res = find_sign_flip(omega, partition_signs(omega, X))
    part = partition_signs(omega, X, res.g_prime)
    assert salvage_dominance(omega, res.g_prime, part, 64).verdict == VIOLATED


def test_bad_epsilon_rejected():
    omega = parse("x - 1")
    with pytest.raises(ValueError):
        find_sign_flip(omega, partition_signs(omega, IntervalSet.of(0, 3)), eps=0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(0.05, 0.95), st.sampled_from([1e-3, 1e-2, 0.5]))
def test_any_negative_region_can_be_flipped(L, frac, eps):
    r = frac * L
    omega = parse("x - r", {"r": r})
    X = IntervalSet.of(0, L)
    res = find_sign_flip(omega, partition_signs(omega, X), eps=eps)
    assert res.feasible
    assert res.g_prime(np.linspace(0, L, 2001)).min() >= eps
    assert midpoint_beta(omega, res.spec, 0, L, 2**18) < 0
