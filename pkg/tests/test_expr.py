import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from salvage.errors import EvaluationError, ParseError
from salvage.expr import (
    BUILTINS,
    BinOp,
    Call,
    Neg,
    Num,
    Param,
    Var,
    derivative,
    evaluate_expr,
    parse_expr,
    unparse,
)


def test_precedence_and_associativity():
    assert evaluate_expr(parse_expr("2^3^2"), 0.0) == 512.0
    assert evaluate_expr(parse_expr("1 - 2 - 3"), 0.0) == -4.0
    assert evaluate_expr(parse_expr("8 / 4 / 2"), 0.0) == 1.0
    assert evaluate_expr(parse_expr("2 + 3*4"), 0.0) == 14.0
    # unary minus binds tighter than ^ in this grammar
    assert evaluate_expr(parse_expr("-x^2"), 3.0) == 9.0
    assert evaluate_expr(parse_expr("-(x^2)"), 3.0) == -9.0


def test_parameters_bound_at_parse_time():
    e = parse_expr("(1 + z*x)*phi(x)", {"z": 2})
    assert evaluate_expr(e, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert evaluate_expr(e, 1.0) == pytest.approx(3 * math.exp(-0.5) / math.sqrt(2 * math.pi))


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("x +", "unexpected end"),
        ("2 $ x", "unexpected character"),
        ("foo(x)", "unknown function"),
        ("z*x", "unbound parameter"),
        ("", "empty"),
        ("(x", "expected"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError) as info:
        parse_expr(text)
    assert fragment in str(info.value)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse_expr("x + 2 $")
    assert info.value.position == 6


@pytest.mark.parametrize(
    "text, x",
    [("log(x)", 0.0), ("sqrt(x)", -1.0), ("1/x", 0.0), ("x^0.5", -2.0), ("x^(-1)", 0.0), ("exp(x)", 1000.0)],
)
def test_evaluation_errors(text, x):
    with pytest.raises(EvaluationError):
        evaluate_expr(parse_expr(text), x)


def test_evaluation_error_is_vectorized():
    with pytest.raises(EvaluationError, match="x=0"):
        evaluate_expr(parse_expr("log(x)"), np.array([1.0, 2.0, 0.0]))


def test_negative_base_integer_exponent():
    assert evaluate_expr(parse_expr("x^3"), -2.0) == -8.0
    assert evaluate_expr(parse_expr("x^(-2)"), -2.0) == 0.25


def test_symbolic_derivatives():
    q = parse_expr("2 - x + 12*x^2 - 12*x^3")
    dq = derivative(q)
    xs = np.linspace(0, 1, 7)
    np.testing.assert_allclose(evaluate_expr(dq, xs), -1 + 24 * xs - 36 * xs**2, atol=1e-12)
    assert derivative(parse_expr("2")) == Num(0.0)
    dphi = derivative(parse_expr("phi(x)"))
    xs = np.linspace(-3, 3, 13)
    phi = np.exp(-xs**2 / 2) / math.sqrt(2 * math.pi)
    np.testing.assert_allclose(evaluate_expr(dphi, xs), -xs * phi, atol=1e-15)


FD_FIXTURES = [
    "x - 1",
    "2 - x + 12*x^2 - 12*x^3",
    "(1 + 2*x)*phi(x)",
    "x^2",
    "exp(-x)*sqrt(x + 4)",
    "log(x + 5)/(x^2 + 1)",
    "abs(x - 0.3)*x",
    "x^x",
]


@pytest.mark.parametrize("text", FD_FIXTURES)
def test_derivative_matches_central_differences(text):
    e = parse_expr(text)
    d = derivative(e)
    lo, hi = (0.05, 2.0) if text == "x^x" else (-2.0, 2.0)
    xs = np.linspace(lo, hi, 102)[1:-1]
    xs = xs[np.abs(xs - 0.3) > 1e-3]  # keep away from the kink of abs
    h = 1e-5
    fd = (evaluate_expr(e, xs + h) - evaluate_expr(e, xs - h)) / (2 * h)
    exact = evaluate_expr(d, xs)
    assert np.all(np.abs(exact - fd) <= 1e-7 * np.maximum(1.0, np.abs(exact)))


# random trees up to depth 6 for the parse/unparse round trip

leaves = st.one_of(
    st.just(Var()),
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.integers(0, 1000).map(lambda k: Num(float(k))),
    st.just(Param("z", 2.0)),
)


def extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(BUILTINS), children).map(lambda t: Call(*t)),
    )


def depth(node):
    if isinstance(node, Neg):
        return 1 + depth(node.operand)
    if isinstance(node, BinOp):
        return 1 + max(depth(node.left), depth(node.right))
    if isinstance(node, Call):
        return 1 + depth(node.arg)
    return 0


trees = st.recursive(leaves, extend, max_leaves=24).filter(lambda t: depth(t) <= 6)


@settings(max_examples=400, deadline=None)
@given(trees)
def test_parse_unparse_round_trip(tree):
    text = unparse(tree)
    assert parse_expr(text, {"z": 2.0}) == tree
