"""Quadrature, root isolation, monotone decomposition and monotone inversion.

Every routine here works on vectorized callables ``f(ndarray) -> ndarray``;
a :class:`~salvage.funcspec.RealFn` is one.  Reductions are done in a fixed
left-to-right order so results are bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import InversionError, QuadratureError
from .funcspec import RealFn
from .intervals import Interval, IntervalSet

DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-9
DEFAULT_WINDOW = 10.0
MAX_DEPTH = 60
MAX_INTERVALS = 500_000
GRID_DIVISIONS = 4096
# bisection stops at adjacent floats or at this fraction of the starting
# bracket, whichever comes first (only matters for brackets around zero)
BISECT_FLOOR = 2.0**-100

# 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 ascending nodes on [-1, 1]
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[[13, 11, 9]] = _WG[:3]
_GW[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    subdivisions: int
    # part of the estimate from subintervals already at floating-point noise
    roundoff: float = field(default=0.0, compare=False, repr=False)

    def __float__(self):
        return self.value

    def __add__(self, other):
        return QuadratureResult(
            self.value + other.value,
            self.abs_error_estimate + other.abs_error_estimate,
            self.subdivisions + other.subdivisions,
            self.roundoff + other.roundoff,
        )

    def scaled(self, c: float) -> "QuadratureResult":
        return QuadratureResult(
            c * self.value, abs(c) * self.abs_error_estimate, self.subdivisions, abs(c) * self.roundoff
        )

    def to_json(self):
        return {"value": self.value, "error": self.abs_error_estimate, "subdivisions": self.subdivisions}


ZERO = QuadratureResult(0.0, 0.0, 0)


def _gk15(f, a, b):
    """Kronrod value, error estimate and a roundoff-limited flag per interval.

    The estimate is ``|K - G|`` floored at the rounding noise of the
    Kronrod sum; where the floor wins, bisecting further cannot help.
    """
    half = 0.5 * (b - a)
    center = 0.5 * (b + a)
    x = center[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    k = half * (fx @ _KW)
    g = half * (fx @ _GW)
    roundoff = 50 * np.finfo(float).eps * np.abs(half) * (np.abs(fx) @ _KW)
    diff = np.abs(k - g)
    return k, np.maximum(diff, roundoff), diff <= roundoff


def integrate_intervals(
    f: Callable,
    intervals: Sequence[Interval],
    tol=DEFAULT_ABS_TOL,
    max_depth: int = MAX_DEPTH,
) -> List[QuadratureResult]:
    """Integrate ``f`` over each finite interval separately, all in one batch.

    ``tol`` is the absolute tolerance of each integral (a scalar, or one
    value per interval).  A subinterval is accepted once its error estimate
    is below its width-proportional share of the tolerance, once the
    estimate is down to rounding noise, or after ``max_depth`` bisections;
    accepted errors are summed into the estimate.
    """
    n = len(intervals)
    if n == 0:
        return []
    a0 = np.array([iv.lo for iv in intervals], dtype=float)
    b0 = np.array([iv.hi for iv in intervals], dtype=float)
    if not (np.all(np.isfinite(a0)) and np.all(np.isfinite(b0))):
        raise QuadratureError("integrate_intervals needs finite intervals")
    tols = np.broadcast_to(np.asarray(tol, dtype=float), (n,))
    width = b0 - a0
    values = np.zeros(n)
    errors = np.zeros(n)
    counts = np.zeros(n, dtype=int)
    noise = np.zeros(n)

    owner = np.nonzero(width > 0)[0]
    a, b = a0[owner], b0[owner]
    depth = np.zeros(len(owner), dtype=int)
    while owner.size:
        k, err, limited = _gk15(f, a, b)
        share = tols[owner] * (b - a) / width[owner]
        done = (err <= share) | limited | (depth >= max_depth)
        np.add.at(values, owner[done], k[done])
        np.add.at(errors, owner[done], err[done])
        np.add.at(noise, owner[done & limited], err[done & limited])
        np.add.at(counts, owner[done], 1)
        keep = ~done
        owner, a, b, depth = owner[keep], a[keep], b[keep], depth[keep]
        if owner.size * 2 > MAX_INTERVALS:
            raise QuadratureError(f"more than {MAX_INTERVALS} subintervals needed")
        mid = 0.5 * (a + b)
        owner = np.concatenate([owner, owner])
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
        depth = np.concatenate([depth, depth]) + 1
    return [
        QuadratureResult(float(values[i]), float(errors[i]), int(counts[i]), float(noise[i])) for i in range(n)
    ]


def _edge_decay_window(f, lo_inf, hi_inf, start=DEFAULT_WINDOW, rel=1e-18, limit=1e4):
    """Half-width of the truncation window for the infinite ends of a set."""
    L = start
    while True:
        xs = np.linspace(-L if lo_inf else 0.0, L if hi_inf else 0.0, 2049)
        vals = np.abs(np.asarray(f(xs), dtype=float))
        peak = float(np.max(vals))
        edges = []
        if lo_inf:
            edges.append(vals[0])
        if hi_inf:
            edges.append(vals[-1])
        if peak == 0.0 or max(edges) <= rel * peak:
            return L, float(sum(edges))
        if L >= limit:
            raise QuadratureError("integrand does not decay; improper integral cannot be truncated")
        L *= 2.0


def truncate(S: IntervalSet, f: Optional[Callable] = None, window: float = DEFAULT_WINDOW):
    """Replace infinite ends of ``S`` by a finite window.

    Returns ``(finite_set, tail_error_estimate)``.  With ``f`` given, the
    window grows until ``|f|`` at the cut is below ``1e-18`` of its peak and
    the tail error is estimated as ``|f|`` at the cuts times a unit decay
    length.
    """
    lo_inf = any(math.isinf(iv.lo) for iv in S)
    hi_inf = any(math.isinf(iv.hi) for iv in S)
    if not (lo_inf or hi_inf):
        return S, 0.0
    tail = 0.0
    L = window
    if f is not None:
        L, tail = _edge_decay_window(f, lo_inf, hi_inf, start=window)
    return S.clip(-L, L), tail


def integrate(
    f: Callable,
    S,
    tol: float = DEFAULT_ABS_TOL,
    breakpoints: Sequence[float] = (),
    rel_tol: float = 0.0,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over an interval set.

    ``S`` may be an :class:`IntervalSet` or a single :class:`Interval`.
    Infinite ends are truncated (see :func:`truncate`) and the tail estimate
    is added to the error.  The set is split at ``breakpoints`` and, for a
    :class:`RealFn`, at its piece boundaries.  The target accuracy is
    ``max(tol, rel_tol * |value|)``; :class:`QuadratureError` is raised when
    the final estimate, not counting rounding noise, exceeds it.  (A
    target below double-precision noise is therefore met with a
    noise-sized estimate rather than an error.)
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(S, Interval):
        S = IntervalSet([S])
    if S.is_empty:
        return ZERO
    S, tail = truncate(S, f)
    bps = list(breakpoints)
    if isinstance(f, RealFn):
        bps.extend(f.breakpoints)
    pieces = [iv for iv in split_at(S, bps) if not iv.is_point]
    if not pieces:
        return QuadratureResult(0.0, tail, 0)
    target = tol
    if rel_tol > 0:
        a = np.array([iv.lo for iv in pieces])
        b = np.array([iv.hi for iv in pieces])
        rough, _, _ = _gk15(f, a, b)
        target = max(tol, rel_tol * abs(math.fsum(rough)))
    budget = target - tail
    if budget <= 0:
        raise QuadratureError(f"truncation error {tail:.3g} exceeds tolerance {target:.3g}")
    total = math.fsum(iv.length for iv in pieces)
    shares = [budget * iv.length / total for iv in pieces]
    results = integrate_intervals(f, pieces, tol=shares)
    value = math.fsum(r.value for r in results)
    err = math.fsum(r.abs_error_estimate for r in results) + tail
    nsub = sum(r.subdivisions for r in results)
    noise = math.fsum(r.roundoff for r in results)
    if err - noise > target:
        raise QuadratureError(f"error estimate {err:.3g} exceeds tolerance {target:.3g}")
    return QuadratureResult(value, err, nsub, noise)


def split_at(S: IntervalSet, points: Sequence[float]) -> List[Interval]:
    """Components of ``S`` cut at ``points`` (each cut point goes to the right piece)."""
    pts = sorted(set(float(p) for p in points if math.isfinite(p)))
    out = []
    for iv in S:
        inner = [p for p in pts if iv.lo < p < iv.hi]
        if not inner:
            out.append(iv)
            continue
        edges = [iv.lo] + inner + [iv.hi]
        for k in range(len(edges) - 1):
            lo_closed = iv.lo_closed if k == 0 else True
            hi_closed = iv.hi_closed if k == len(edges) - 2 else False
            piece = Interval.make(edges[k], edges[k + 1], lo_closed, hi_closed)
            if piece is not None:
                out.append(piece)
    return out


# --------------------------------------------------------------------------
# roots

def _bisect_sign(f, a, b, fa):
    """Shrink a sign-change bracket to adjacent floats; returns the root estimate."""
    sa = math.copysign(1.0, fa)
    floor = (b - a) * BISECT_FLOOR
    while True:
        m = 0.5 * (a + b)
        if m <= a or m >= b or b - a <= floor:
            break
        fm = float(f(m))
        if fm == 0.0:
            return m
        if math.copysign(1.0, fm) == sa:
            a = m
        else:
            b = m
    fa_, fb_ = abs(float(f(a))), abs(float(f(b)))
    return a if fa_ <= fb_ else b


def default_grid_h(S: IntervalSet) -> float:
    return S.measure() / GRID_DIVISIONS


def isolate_roots(f: Callable, S, grid_h: Optional[float] = None) -> List[float]:
    """One refined root per sign change of ``f`` seen on a uniform grid over ``S``.

    Brackets are bisected down to adjacent floating-point numbers (well
    below the 1e-12 width contract).  Tangential roots without a sign
    change are not reported.  A jump discontinuity across zero is reported
    like a root, which is what sign partitions need.
    """
    if isinstance(S, Interval):
        S = IntervalSet([S])
    if S.is_empty:
        return []
    S, _ = truncate(S)
    if grid_h is None:
        grid_h = default_grid_h(S)
    if grid_h <= 0:
        raise ValueError("grid_h must be positive")
    roots = []
    for iv in S:
        if iv.is_point:
            continue
        n = max(2, int(math.ceil(iv.length / grid_h)) + 1)
        xs = np.linspace(iv.lo, iv.hi, n)
        xs = _nudge_open_ends(xs, iv)
        vals = np.asarray(f(xs), dtype=float)
        sign = np.sign(vals)
        nz = np.nonzero(sign)[0]
        for i, j in zip(nz[:-1], nz[1:]):
            if sign[i] == sign[j]:
                continue
            if j == i + 1:
                roots.append(float(_bisect_sign(f, float(xs[i]), float(xs[j]), float(vals[i]))))
            else:
                # exact zeros on the grid between opposite signs
                roots.append(float(xs[(i + j) // 2]) if (j - i) % 2 == 0 else float(xs[i + 1]))
    return sorted(roots)


def _nudge_open_ends(xs, iv):
    # open ends may be outside a function's domain; step inside by a hair
    xs = xs.copy()
    if not iv.lo_closed:
        xs[0] = np.nextafter(xs[0], xs[1])
    if not iv.hi_closed:
        xs[-1] = np.nextafter(xs[-1], xs[-2])
    return xs


# --------------------------------------------------------------------------
# monotone segments

INCREASING = "increasing"
DECREASING = "decreasing"
CONSTANT = "constant"


@dataclass(frozen=True)
class MonotoneSegment:
    """Piece of a set on which a function is monotone.

    ``fn`` evaluates the function's formula on the closure of ``interval``
    (no domain check), so one-sided limits at open ends are available.
    ``lo_value``/``hi_value`` are the values at the two ends of the closure.
    """

    interval: Interval
    direction: str
    fn: Callable
    lo_value: float
    hi_value: float

    @property
    def strict(self) -> bool:
        return self.direction != CONSTANT

    @property
    def value_min(self) -> float:
        return min(self.lo_value, self.hi_value)

    @property
    def value_max(self) -> float:
        return max(self.lo_value, self.hi_value)

    def image(self) -> Interval:
        """Image of the segment with open/closed ends carried over."""
        iv = self.interval
        if self.direction == INCREASING:
            return Interval(self.lo_value, self.hi_value, iv.lo_closed, iv.hi_closed)
        if self.direction == DECREASING:
            return Interval(self.hi_value, self.lo_value, iv.hi_closed, iv.lo_closed)
        return Interval.point(self.lo_value)

    def to_json(self):
        return {
            "interval": self.interval.to_json(),
            "direction": self.direction,
            "value_range": [self.value_min, self.value_max],
        }


def monotone_segments(f: RealFn, S, grid_h: Optional[float] = None) -> List[MonotoneSegment]:
    """Split ``S`` where ``f'`` changes sign and at ``f``'s piece boundaries.

    Segments are half-open internally and inherit the closure of ``S`` at
    its ends; together they partition ``S`` (single points are dropped).
    """
    if isinstance(S, Interval):
        S = IntervalSet([S])
    S, _ = truncate(S)
    if S.is_empty:
        return []
    if grid_h is None:
        grid_h = default_grid_h(S)
    df = f.derivative()
    segments = []
    for comp in S:
        if comp.is_point:
            continue
        cuts = [p for p in f.breakpoints if comp.lo < p < comp.hi]
        edges = [comp.lo] + cuts + [comp.hi]
        for k in range(len(edges) - 1):
            lo_c = comp.lo_closed if k == 0 else True
            hi_c = comp.hi_closed if k == len(edges) - 2 else False
            piece_iv = Interval(edges[k], edges[k + 1], lo_c, hi_c)
            pidx = int(f.piece_index(piece_iv.midpoint))
            fn = f.piece_fn(pidx)
            dfn = df.piece_fn(pidx)
            crit = isolate_roots(dfn, IntervalSet([piece_iv.closure()]), grid_h)
            crit = [c for c in crit if piece_iv.lo < c < piece_iv.hi]
            pts = [piece_iv.lo] + crit + [piece_iv.hi]
            for j in range(len(pts) - 1):
                seg = Interval(
                    pts[j],
                    pts[j + 1],
                    piece_iv.lo_closed if j == 0 else True,
                    piece_iv.hi_closed if j == len(pts) - 2 else False,
                )
                segments.append(_classify(seg, fn, dfn))
    return segments


def _classify(seg, fn, dfn):
    probe = np.linspace(seg.lo, seg.hi, 9)[1:-1]
    d = np.asarray(dfn(probe), dtype=float)
    v_lo, v_hi = float(fn(seg.lo)), float(fn(seg.hi))
    scale = max(1.0, abs(v_lo), abs(v_hi)) / max(seg.length, 1e-300)
    if np.max(np.abs(d)) <= 1e-13 * scale and abs(v_hi - v_lo) <= 1e-13 * max(1.0, abs(v_lo)):
        direction = CONSTANT
    else:
        direction = INCREASING if v_hi > v_lo else DECREASING
    return MonotoneSegment(seg, direction, fn, v_lo, v_hi)


def invert_on_segment(f, seg: MonotoneSegment, y, slack: float = 1e-12):
    """Solve ``f(x) = y`` on a strictly monotone segment by bisection.

    ``y`` may be an array (solved jointly).  Bisection runs to adjacent
    floats (or to ``BISECT_FLOOR`` of the segment length), which meets ``|f(x) - y| <= 1e-10 max(1, |y|)`` for any
    reasonably conditioned segment.  ``f`` may be ``None`` to use the
    segment's own formula.
    """
    if seg.direction == CONSTANT:
        raise InversionError("cannot invert a constant segment")
    fn = seg.fn if f is None else f
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    lo_v, hi_v = seg.value_min, seg.value_max
    tol = slack * np.maximum(1.0, np.abs(y_arr))
    outside = (y_arr < lo_v - tol) | (y_arr > hi_v + tol)
    if np.any(outside):
        bad = float(y_arr[outside][0])
        raise InversionError(f"y={bad:.17g} is outside the segment range [{lo_v:.17g}, {hi_v:.17g}]")
    sign = 1.0 if seg.direction == INCREASING else -1.0
    a = np.full(y_arr.shape, seg.interval.lo)
    b = np.full(y_arr.shape, seg.interval.hi)
    floor = seg.interval.length * BISECT_FLOOR
    for _ in range(2100):
        m = 0.5 * (a + b)
        active = (m > a) & (m < b) & (b - a > floor)
        if not np.any(active):
            break
        fm = np.asarray(fn(m), dtype=float)
        go_right = sign * (fm - y_arr) < 0
        a = np.where(active & go_right, m, a)
        b = np.where(active & ~go_right, m, b)
    fa, fb = np.asarray(fn(a), dtype=float), np.asarray(fn(b), dtype=float)
    x = np.where(np.abs(fa - y_arr) <= np.abs(fb - y_arr), a, b)
    if np.ndim(y) == 0:
        return float(x[0])
    return x


def value_range(f: RealFn, S, grid_h: Optional[float] = None):
    """``(min, max)`` of ``f`` over the closure of ``S`` via its monotone segments."""
    segs = monotone_segments(f, S, grid_h)
    if not segs:
        raise ValueError("empty set has no range")
    return min(s.value_min for s in segs), max(s.value_max for s in segs)
