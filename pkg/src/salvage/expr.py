"""Expression trees for scalar functions of one variable ``x``.

Grammar (``^`` binds looser than unary minus, so ``-x^2`` is ``(-x)^2``)::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := unary ("^" factor)?
    unary  := "-" unary | atom
    atom   := number | "x" | ident | ident "(" expr ")" | "(" expr ")"

Builtins are ``exp``, ``log``, ``sqrt``, ``abs`` and ``phi`` (standard normal
density).  Named parameters are bound to numbers at parse time.

Evaluation is vectorized over numpy arrays and raises
:class:`~salvage.errors.EvaluationError` instead of producing NaN/inf.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from .errors import EvaluationError, ParseError

BUILTINS = ("exp", "log", "sqrt", "abs", "phi")
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class Expr:
    """Base class of all expression nodes (immutable, structurally comparable)."""

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return unparse(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    pass


@dataclass(frozen=True, eq=True)
class Param(Expr):
    name: str
    value: float


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    arg: Expr


X = Var()


def _lift(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Num(float(v))


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, params):
        self.text = text
        self.params = params
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.text)

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0, self.text)
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        base = self.unary()
        if self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if val == "x":
                return X
            if self.peek()[1] == "(":
                if val not in BUILTINS:
                    raise ParseError(f"unknown function {val!r}", pos, self.text)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in BUILTINS:
                raise ParseError(f"function {val!r} needs an argument", pos, self.text)
            if val not in self.params:
                raise ParseError(f"unbound parameter {val!r}", pos, self.text)
            return Param(val, float(self.params[val]))
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", pos, self.text)


def parse_expr(text: str, params: Optional[Mapping[str, float]] = None) -> Expr:
    """Parse ``text`` into an expression tree, binding ``params`` by name."""
    if not isinstance(text, str):
        raise ParseError(f"expression must be a string, got {type(text).__name__}")
    return _Parser(text, dict(params or {})).parse()


# --------------------------------------------------------------------------
# unparse

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
_NEG_PREC = 4
_ATOM_PREC = 5


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def _fmt_number(v):
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def unparse(node: Expr) -> str:
    """Render ``node`` with the minimal parentheses the grammar needs."""
    if isinstance(node, Num):
        if node.value < 0:
            return f"(-{_fmt_number(-node.value)})"
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    if isinstance(node, Neg):
        inner = unparse(node.operand)
        if _prec(node.operand) < _NEG_PREC:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left, right = unparse(node.left), unparse(node.right)
        if node.op == "^":
            if _prec(node.left) <= p:
                left = f"({left})"
            if _prec(node.right) < p:
                right = f"({right})"
        else:
            if _prec(node.left) < p:
                left = f"({left})"
            if _prec(node.right) <= p:
                right = f"({right})"
        return f"{left}{node.op}{right}" if node.op in "*/^" else f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# evaluation

def _fail(msg, x, mask):
    where = np.broadcast_to(np.asarray(x, dtype=float), np.shape(mask))[mask]
    at = f" at x={where.flat[0]:.17g}" if where.size else ""
    raise EvaluationError(msg + at)


def evaluate_expr(node: Expr, x):
    """Evaluate ``node`` at ``x`` (scalar or array); raises on math-domain errors."""
    arr = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(node, arr)
    out = np.broadcast_to(out, arr.shape).astype(float, copy=True) if np.ndim(out) < arr.ndim else out
    bad = ~np.isfinite(out)
    if np.any(bad):
        _fail("non-finite result (overflow)", arr, bad)
    if arr.ndim == 0:
        return float(out)
    return out


def _eval(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Param):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            zero = np.asarray(b) == 0
            if np.any(zero):
                _fail("division by zero", x, np.broadcast_to(zero, np.broadcast(x, zero).shape))
            return a / b
        if op == "^":
            return _pow(a, b, x)
    if isinstance(node, Call):
        u = _eval(node.arg, x)
        f = node.func
        if f == "exp":
            return np.exp(u)
        if f == "log":
            bad = np.asarray(u) <= 0
            if np.any(bad):
                _fail("log of non-positive value", x, np.broadcast_to(bad, np.broadcast(x, bad).shape))
            return np.log(u)
        if f == "sqrt":
            bad = np.asarray(u) < 0
            if np.any(bad):
                _fail("sqrt of negative value", x, np.broadcast_to(bad, np.broadcast(x, bad).shape))
            return np.sqrt(u)
        if f == "abs":
            return np.abs(u)
        if f == "phi":
            return _INV_SQRT_2PI * np.exp(-0.5 * np.square(u))
    raise TypeError(f"not an expression node: {node!r}")


def _pow(a, b, x):
    if isinstance(b, float) and b >= 0 and b == int(b):
        # constant nonnegative integer exponent: always defined
        return np.power(a, b)
    a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    integral = b_arr == np.round(b_arr)
    neg_base = (a_arr < 0) & ~integral
    zero_neg = (a_arr == 0) & (b_arr < 0)
    bad = neg_base | zero_neg
    if np.any(bad):
        shape = np.broadcast(x, bad).shape
        msg = "zero to a negative power" if np.any(zero_neg) else "negative base with non-integer exponent"
        _fail(msg, x, np.broadcast_to(bad, shape))
    return np.power(a_arr, b_arr)


# --------------------------------------------------------------------------
# smart constructors with light constant folding

def _is_num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def mul(a, b):
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    return BinOp("*", a, b)


def div(a, b):
    if _is_num(b, 1.0):
        return a
    if _is_num(a, 0.0):
        return Num(0.0)
    return BinOp("/", a, b)


def neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(a, b):
    if _is_num(b, 1.0):
        return a
    if _is_num(b, 0.0):
        return Num(1.0)
    return BinOp("^", a, b)


def depends_on_x(node: Expr) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Param)):
        return False
    if isinstance(node, Neg):
        return depends_on_x(node.operand)
    if isinstance(node, BinOp):
        return depends_on_x(node.left) or depends_on_x(node.right)
    if isinstance(node, Call):
        return depends_on_x(node.arg)
    raise TypeError(node)


def derivative(node: Expr) -> Expr:
    """Exact symbolic derivative with respect to ``x``."""
    if not depends_on_x(node):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0)
    if isinstance(node, Neg):
        return neg(derivative(node.operand))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = derivative(a), derivative(b)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        if node.op == "/":
            if not depends_on_x(b):
                return div(da, b)
            return div(sub(mul(da, b), mul(a, db)), power(b, Num(2.0)))
        if node.op == "^":
            if not depends_on_x(b):
                # c * a^(c-1) * a'
                return mul(mul(b, power(a, sub(b, Num(1.0)))), da)
            # a^b * (b' log a + b a'/a)
            return mul(node, add(mul(db, Call("log", a)), div(mul(b, da), a)))
    if isinstance(node, Call):
        u = node.arg
        du = derivative(u)
        f = node.func
        if f == "exp":
            inner = node
        elif f == "log":
            return div(du, u)
        elif f == "sqrt":
            return div(du, mul(Num(2.0), node))
        elif f == "abs":
            inner = div(u, node)
        elif f == "phi":
            inner = neg(mul(u, node))
        else:
            raise TypeError(f)
        return mul(inner, du)
    raise TypeError(f"not an expression node: {node!r}")


ExprLike = Union[Expr, str, float, int]
