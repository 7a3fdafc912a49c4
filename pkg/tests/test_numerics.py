import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pint
from salvage.errors import InversionError, QuadratureError
from salvage.funcspec import parse
from salvage.intervals import Interval, IntervalSet
from salvage.numerics import (
    CONSTANT,
    DECREASING,
    INCREASING,
    _GW,
    _KW,
    _NODES,
    integrate,
    integrate_intervals,
    invert_on_segment,
    isolate_roots,
    monotone_segments,
    truncate,
    value_range,
)


def test_integrate_examples():
    r = integrate(parse("x - 1"), IntervalSet.of(0, 3), 1e-10)
    assert r.value == pytest.approx(1.5, abs=1e-12)
    assert r.abs_error_estimate <= 1e-10
    assert integrate(parse("x"), IntervalSet.empty(), 1e-10).value == 0.0
    gauss = parse("(1 + 2*x)*phi(x)*x^2")
    r = integrate(gauss, IntervalSet.of(-math.inf, math.inf), 1e-9)
    assert r.value == pytest.approx(1.0, abs=1e-9)


def test_kronrod_rule_contains_gauss_rule():
    gx, gw = np.polynomial.legendre.leggauss(7)
    used = _GW != 0
    np.testing.assert_allclose(_NODES[used], gx, atol=1e-15)
    np.testing.assert_allclose(_GW[used], gw, atol=1e-15)
    assert _KW.sum() == pytest.approx(2.0, abs=1e-14)
    # K15 integrates polynomials up to degree 22 exactly
    for k in range(0, 23):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert (_KW * _NODES**k).sum() == pytest.approx(exact, abs=1e-14)


def _poly_text(coeffs):
    return " + ".join(f"({c!r})*x^{k}" for k, c in enumerate(coeffs))


coeffs = st.lists(st.integers(-20, 20), min_size=1, max_size=9)
ends = st.integers(-50, 50).map(lambda k: k / 10)


@settings(max_examples=100, deadline=None)
@given(coeffs, ends, ends)
def test_polynomials_match_exact_antiderivative(cs, a, b):
    if a == b:
        return
    a, b = min(a, b), max(a, b)
    exact = float(pint([Fraction(c) for c in cs], Fraction(a).limit_denominator(), Fraction(b).limit_denominator()))
    got = integrate(parse(_poly_text([float(c) for c in cs])), IntervalSet.of(a, b), 1e-10).value
    assert abs(got - exact) <= 1e-10 * max(1.0, abs(exact))


@settings(max_examples=60, deadline=None)
@given(coeffs, ends, ends, ends)
def test_quadrature_is_additive(cs, a, m, b):
    a, m, b = sorted((a, m, b))
    if not a < m < b:
        return
    f = parse(_poly_text([float(c) for c in cs]))
    whole = integrate(f, IntervalSet.of(a, b), 1e-10).value
    left = integrate(f, IntervalSet.of(a, m, True, False), 1e-10).value
    right = integrate(f, IntervalSet.of(m, b), 1e-10).value
    assert abs(whole - (left + right)) <= 2e-10 * max(1.0, abs(whole))


def test_quadrature_fails_loudly():
    with pytest.raises(QuadratureError):
        integrate(parse("1/sqrt(abs(x))"), IntervalSet.of(1e-300, 1), 1e-14, breakpoints=())
    with pytest.raises(QuadratureError):
        integrate_intervals(parse("x"), [Interval(0, math.inf)])


def test_batched_results_match_individual():
    f = parse("exp(x)*x")
    ivs = [Interval(0, 1), Interval(1, 3), Interval(-2, -1)]
    batch = integrate_intervals(f, ivs, 1e-11)
    for iv, r in zip(ivs, batch):
        assert r.value == pytest.approx(integrate(f, IntervalSet([iv]), 1e-11).value, abs=2e-11)


def test_truncation_window_and_tail():
    f = parse("(1 + 2*x)*phi(x)")
    S, tail = truncate(IntervalSet.of(-math.inf, math.inf), f)
    assert S.lo <= -10 and S.hi >= 10
    edge = abs(f(S.hi)) + abs(f(S.lo))
    assert edge <= 1e-18 * 0.4
    assert tail <= 1e-20


def test_isolate_roots_examples():
    assert isolate_roots(parse("x - 1"), IntervalSet.of(0, 3)) == [1.0]
    assert isolate_roots(parse("1"), IntervalSet.of(0, 1)) == []
    assert isolate_roots(parse("(1 + 2*x)*phi(x)"), IntervalSet.of(-10, 10)) == [-0.5]


def test_roots_are_bracketed_tightly():
    roots = isolate_roots(parse("x^3 - 2*x"), IntervalSet.of(-3, 3))
    np.testing.assert_allclose(roots, [-math.sqrt(2), 0.0, math.sqrt(2)], atol=1e-12)


def test_monotone_segments_examples():
    segs = monotone_segments(parse("x + 2"), IntervalSet.of(0, 1, True, False))
    assert [s.direction for s in segs] == [INCREASING]
    assert segs[0].interval == Interval(0, 1, True, False)

    segs = monotone_segments(parse("2 - x + 12*x^2 - 12*x^3"), IntervalSet.of(0, 1))
    assert [s.direction for s in segs] == [DECREASING, INCREASING, DECREASING]
    c1, c2 = (-24 + math.sqrt(24**2 - 144)) / -72, (-24 - math.sqrt(24**2 - 144)) / -72
    assert segs[0].interval.hi == pytest.approx(c1, abs=1e-12)
    assert segs[1].interval.hi == pytest.approx(c2, abs=1e-12)

    segs = monotone_segments(parse("3"), IntervalSet.of(0, 1))
    assert [s.direction for s in segs] == [CONSTANT]


def test_segments_split_at_piece_boundaries():
    g = parse([{"interval": [0, 1], "expr": "x"}, {"interval": [1, 2], "expr": "x"}])
    segs = monotone_segments(g, IntervalSet.of(0, 2))
    assert len(segs) == 2 and segs[0].interval.hi == 1.0


def test_inversion_examples():
    seg = monotone_segments(parse("x + 2"), IntervalSet.of(0, 1))[0]
    assert invert_on_segment(None, seg, 2.5) == pytest.approx(0.5, abs=1e-15)
    seg = monotone_segments(parse("x^2"), IntervalSet.of(0, 2))[0]
    assert invert_on_segment(None, seg, 2.0) == pytest.approx(math.sqrt(2), abs=1e-15)
    q = parse("2 - x + 12*x^2 - 12*x^3")
    last = monotone_segments(q, IntervalSet.of(0, 1))[-1]
    assert invert_on_segment(q, last, 1.0) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InversionError):
        invert_on_segment(None, seg, 5.0)


@pytest.mark.parametrize(
    "text, lo, hi",
    [("2 - x + 12*x^2 - 12*x^3", 0.0, 1.0), ("x^2", -3.0, 3.0), ("exp(x) - x^3", -2.0, 4.0), ("phi(x)", -6.0, 6.0)],
)
def test_inversion_round_trip(text, lo, hi):
    f = parse(text)
    rng = np.random.default_rng(7)
    for seg in monotone_segments(f, IntervalSet.of(lo, hi)):
        xs = rng.uniform(seg.interval.lo, seg.interval.hi, 100)
        back = invert_on_segment(None, seg, f(xs))
        # accuracy in x is limited by the slope; stay away from flat ends
        slope = np.abs(f.derivative()(xs))
        ok = slope > 1e-3
        assert np.max(np.abs(back - xs)[ok]) <= 1e-8


def test_value_range():
    lo, hi = value_range(parse("2 - x + 12*x^2 - 12*x^3"), IntervalSet.of(0, 1))
    assert lo == 1.0
    assert hi == pytest.approx(3.1329058247451815, abs=1e-12)
