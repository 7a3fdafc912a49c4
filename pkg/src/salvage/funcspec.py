"""Piecewise scalar functions of one real variable with an attached domain."""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import EvaluationError, OutOfDomainError, ParseError
from .expr import Expr, derivative, evaluate_expr, parse_expr, unparse
from .intervals import Interval, IntervalSet, locate


class RealFn:
    """A function given by expression pieces on sorted, disjoint intervals.

    Calling the object evaluates it (vectorized).  Points outside the union
    of the piece intervals raise :class:`OutOfDomainError` unless
    ``extend=True``, in which case the nearest piece's expression is used.
    """

    __slots__ = ("_pieces", "_domain", "_intervals")

    def __init__(self, pieces: Iterable[Tuple[Interval, Expr]]):
        pieces = sorted(pieces, key=lambda p: (p[0].lo, not p[0].lo_closed))
        if not pieces:
            raise ValueError("a RealFn needs at least one piece")
        for (a, _), (b, _) in zip(pieces, pieces[1:]):
            if a.intersect(b) is not None:
                raise ValueError(f"overlapping piece intervals {a} and {b}")
        self._pieces = tuple((iv, ex) for iv, ex in pieces)
        self._intervals = tuple(iv for iv, _ in self._pieces)
        self._domain = IntervalSet(self._intervals)

    @classmethod
    def single(cls, expr: Expr, interval: Interval) -> "RealFn":
        return cls([(interval, expr)])

    @property
    def pieces(self):
        return self._pieces

    @property
    def domain(self) -> IntervalSet:
        return self._domain

    @property
    def breakpoints(self) -> list:
        """Interior piece boundaries (where the formula may switch)."""
        pts = set()
        for iv in self._intervals:
            pts.update(v for v in (iv.lo, iv.hi) if math.isfinite(v))
        lo, hi = self._domain.lo, self._domain.hi
        return sorted(p for p in pts if lo < p < hi)

    def restrict(self, interval: Interval) -> "RealFn":
        out = []
        for iv, ex in self._pieces:
            sub = iv.intersect(interval)
            if sub is not None:
                out.append((sub, ex))
        if not out:
            raise OutOfDomainError(f"{interval} does not meet the domain {self._domain}")
        return RealFn(out)

    def with_domain(self, domain: IntervalSet) -> "RealFn":
        """Restrict to ``domain`` (which must lie inside the current domain)."""
        out = []
        for iv, ex in self._pieces:
            for comp in domain:
                sub = iv.intersect(comp)
                if sub is not None:
                    out.append((sub, ex))
        if not out:
            raise OutOfDomainError(f"{domain} does not meet the domain {self._domain}")
        return RealFn(out)

    def piece_index(self, x) -> np.ndarray:
        return locate(self._intervals, x)

    def piece_fn(self, i: int):
        """Evaluator of piece ``i``'s formula with no domain check.

        At an open end where the formula itself is undefined (a smooth bump
        at the edge of its support, say) the value one ulp inside is used
        as the one-sided limit.
        """
        iv, ex = self._pieces[i]

        def fn(x):
            try:
                return evaluate_expr(ex, x)
            except EvaluationError:
                arr = np.asarray(x, dtype=float)
                moved = arr
                if not iv.lo_closed:
                    moved = np.where(arr == iv.lo, np.nextafter(iv.lo, iv.hi), moved)
                if not iv.hi_closed:
                    moved = np.where(arr == iv.hi, np.nextafter(iv.hi, iv.lo), moved)
                if np.array_equal(moved, arr):
                    raise
                return evaluate_expr(ex, moved if arr.ndim else float(moved))

        return fn

    def __call__(self, x, extend: bool = False):
        return self.evaluate(x, extend=extend)

    def evaluate(self, x, extend: bool = False):
        arr = np.asarray(x, dtype=float)
        if len(self._pieces) == 1:
            if not extend:
                inside = self._intervals[0].contains(arr)
                if not np.all(inside):
                    _out_of_domain(arr, ~np.asarray(inside), self._domain)
            return evaluate_expr(self._pieces[0][1], arr)
        idx = locate(self._intervals, arr)
        missing = idx < 0
        if np.any(missing):
            if not extend:
                _out_of_domain(arr, missing, self._domain)
            idx = np.where(missing, self._nearest(arr), idx)
        if arr.ndim == 0:
            return evaluate_expr(self._pieces[int(idx)][1], arr)
        out = np.empty(arr.shape)
        for k in np.unique(idx):
            sel = idx == k
            out[sel] = evaluate_expr(self._pieces[k][1], arr[sel])
        return out

    def _nearest(self, x):
        los = np.array([iv.lo for iv in self._intervals])
        his = np.array([iv.hi for iv in self._intervals])
        dist = np.maximum(los[None, :] - x.reshape(-1, 1), 0) + np.maximum(
            x.reshape(-1, 1) - his[None, :], 0
        )
        return np.argmin(dist, axis=1).reshape(x.shape)

    def derivative(self) -> "RealFn":
        return RealFn((iv, derivative(ex)) for iv, ex in self._pieces)

    def __repr__(self):
        body = ", ".join(f"{iv}: {unparse(ex)}" for iv, ex in self._pieces)
        return f"RealFn({body})"

    def to_json(self):
        if len(self._pieces) == 1:
            return unparse(self._pieces[0][1])
        return [
            {"interval": [_enc(iv.lo), _enc(iv.hi)], "expr": unparse(ex)} for iv, ex in self._pieces
        ]


def _enc(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _out_of_domain(x, mask, domain):
    bad = np.asarray(x)[mask] if np.ndim(x) else np.asarray([x])
    raise OutOfDomainError(f"x={float(bad.flat[0]):.17g} is outside the domain {domain}")


def _endpoint(v) -> float:
    if isinstance(v, str):
        key = v.strip().lower()
        if key in ("inf", "+inf", "infinity"):
            return math.inf
        if key in ("-inf", "-infinity"):
            return -math.inf
        try:
            return float(key)
        except ValueError:
            raise ParseError(f"bad interval endpoint {v!r}") from None
    return float(v)


def convention_pieces(bounds: Sequence[Tuple[float, float]]) -> list:
    """Intervals for sorted piece bounds: closed left, open right, last piece closed."""
    order = sorted(range(len(bounds)), key=lambda i: bounds[i][0])
    out = [None] * len(bounds)
    for rank, i in enumerate(order):
        lo, hi = bounds[i]
        last = rank == len(order) - 1
        iv = Interval.make(lo, hi, True, last)
        if iv is None:
            raise ParseError(f"empty piece interval [{lo}, {hi}]")
        out[i] = iv
    return out


Spec = Union[str, Sequence[Mapping]]


def parse(
    text: Spec,
    params: Optional[Mapping[str, float]] = None,
    domain: Union[Interval, Tuple, None] = None,
) -> RealFn:
    """Build a :class:`RealFn` from an expression string or a piecewise list.

    A string gives a single piece on ``domain`` (default the whole real
    line).  A piecewise list holds ``{"interval": [lo, hi], "expr": str}``
    items, with ``"-inf"``/``"inf"`` sentinels for infinite endpoints.
    """
    if isinstance(text, str):
        if domain is None:
            domain = Interval(-math.inf, math.inf, False, False)
        elif not isinstance(domain, Interval):
            lo, hi = (_endpoint(v) for v in domain)
            domain = Interval.make(lo, hi, True, True)
            if domain is None:
                raise ParseError("empty domain")
        return RealFn.single(parse_expr(text, params), domain)

    items = list(text)
    if not items:
        raise ParseError("empty piecewise definition")
    bounds, exprs = [], []
    for k, item in enumerate(items):
        try:
            lo, hi = (_endpoint(v) for v in item["interval"])
            src = item["expr"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"piece {k}: expected {{'interval': [lo, hi], 'expr': str}} ({exc})") from None
        bounds.append((lo, hi))
        exprs.append(parse_expr(src, params))
    intervals = convention_pieces(bounds)
    pieces = list(zip(intervals, exprs))
    try:
        fn = RealFn(pieces)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    if domain is not None:
        fn = fn.restrict(domain if isinstance(domain, Interval) else Interval(*map(_endpoint, domain)))
    return fn


def differentiate(f: RealFn) -> RealFn:
    """Piece-by-piece exact derivative; piece boundaries unchanged."""
    return f.derivative()


def evaluate(f: RealFn, x, extend: bool = False):
    return f.evaluate(x, extend=extend)


def constant(value: float, domain: Union[Interval, IntervalSet]) -> RealFn:
    from .expr import Num

    comps = [domain] if isinstance(domain, Interval) else list(domain)
    return RealFn((iv, Num(float(value))) for iv in comps)
