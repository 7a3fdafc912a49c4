"""Sign partition of a weight function and preimages of value sets.

``X^-`` is where the weight is negative, ``X^+`` where it is nonnegative
(boundary zeros go to ``X^+``), and the matched set ``X^+_m`` holds the
points of ``X^+`` whose marginal-effect value is also attained in ``X^-``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .funcspec import RealFn
from .intervals import Interval, IntervalSet
from .numerics import (
    CONSTANT,
    INCREASING,
    MonotoneSegment,
    invert_on_segment,
    isolate_roots,
    monotone_segments,
    truncate,
)


@dataclass(frozen=True)
class SignPartition:
    domain: IntervalSet
    x_minus: IntervalSet
    x_plus: IntervalSet
    x_plus_matched: Optional[IntervalSet] = None

    def to_json(self):
        out = {
            "domain": self.domain.to_json(),
            "x_minus": self.x_minus.to_json(),
            "x_plus": self.x_plus.to_json(),
            "x_minus_measure": self.x_minus.measure(),
            "x_plus_measure": self.x_plus.measure(),
        }
        if self.x_plus_matched is not None:
            out["x_plus_matched"] = self.x_plus_matched.to_json()
            out["x_plus_matched_measure"] = self.x_plus_matched.measure()
        return out


def partition_signs(
    omega: RealFn,
    X,
    g_prime: Optional[RealFn] = None,
    grid_h: Optional[float] = None,
) -> SignPartition:
    """Split ``X`` into ``{omega < 0}`` and ``{omega >= 0}``.

    Sign changes are located with :func:`isolate_roots`; each stretch between
    consecutive roots takes the sign of ``omega`` at its midpoint.  When
    ``g_prime`` is given the matched set is computed as well.
    """
    if isinstance(X, Interval):
        X = IntervalSet([X])
    X, _ = truncate(X, omega)
    roots = isolate_roots(omega, X, grid_h)
    negative = []
    for comp in X:
        if comp.is_point:
            if omega(comp.lo) < 0:
                negative.append(comp)
            continue
        cuts = [r for r in roots if comp.lo < r < comp.hi]
        pts = [comp.lo] + cuts + [comp.hi]
        mids = np.array([0.5 * (p + q) for p, q in zip(pts[:-1], pts[1:])])
        signs = np.asarray(omega(mids), dtype=float)
        for k, s in enumerate(signs):
            if s >= 0:
                continue
            lo, hi = pts[k], pts[k + 1]
            lo_closed = k == 0 and comp.lo_closed and omega(lo) < 0
            hi_closed = k == len(signs) - 1 and comp.hi_closed and omega(hi) < 0
            negative.append(Interval(lo, hi, lo_closed, hi_closed))
    x_minus = IntervalSet(negative)
    x_plus = x_minus.complement(X)
    part = SignPartition(X, x_minus, x_plus)
    if g_prime is not None:
        part = SignPartition(X, x_minus, x_plus, match_set(omega, g_prime, part, grid_h))
    return part


def segment_preimage(seg: MonotoneSegment, Y: Interval, inverse=None) -> Optional[Interval]:
    """``{x in seg : g(x) in Y}`` for one monotone segment, or ``None``.

    ``inverse`` maps an array of values to points of the segment; it
    defaults to bisection on the segment's formula.
    """
    iv = seg.interval
    if seg.direction == CONSTANT:
        return iv if Y.contains(seg.lo_value) else None
    image = seg.image()
    hit = image.intersect(Y)
    if hit is None:
        return None
    if inverse is None:
        x_a, x_b = invert_on_segment(None, seg, np.array([hit.lo, hit.hi]))
    else:
        x_a, x_b = inverse(np.array([hit.lo, hit.hi]))
    if seg.direction == INCREASING:
        lo, hi, lo_c, hi_c = x_a, x_b, hit.lo_closed, hit.hi_closed
        left_value, right_value = hit.lo, hit.hi
    else:
        lo, hi, lo_c, hi_c = x_b, x_a, hit.hi_closed, hit.lo_closed
        left_value, right_value = hit.hi, hit.lo
    # segment ends are known exactly; keep inversion from rounding past them
    if left_value == seg.lo_value:
        lo = iv.lo
    if right_value == seg.hi_value:
        hi = iv.hi
    lo, hi = max(lo, iv.lo), min(hi, iv.hi)
    if lo == iv.lo:
        lo_c = lo_c and iv.lo_closed
    if hi == iv.hi:
        hi_c = hi_c and iv.hi_closed
    return Interval.make(lo, hi, lo_c, hi_c)


def preimage(segments: List[MonotoneSegment], Y: IntervalSet) -> IntervalSet:
    """Union over segments of ``{x : g(x) in Y}``."""
    out = []
    for seg in segments:
        for comp in Y:
            out.append(segment_preimage(seg, comp))
    return IntervalSet(out)


def value_image(segments: List[MonotoneSegment]) -> IntervalSet:
    """Closed image ``g(S)`` assembled from monotone segments."""
    return IntervalSet(Interval.closed(s.value_min, s.value_max) for s in segments)


def match_set(
    omega: RealFn,
    g_prime: RealFn,
    part: SignPartition,
    grid_h: Optional[float] = None,
) -> IntervalSet:
    """``{x in X^+ : g'(x) in g'(X^-)}``, up to sets of measure zero.

    ``omega`` is accepted for interface symmetry; the set depends only on
    the partition and ``g_prime``.
    """
    if part.x_minus.is_empty or part.x_plus.is_empty:
        return IntervalSet.empty()
    y_minus = value_image(monotone_segments(g_prime, part.x_minus, grid_h))
    plus_segs = monotone_segments(g_prime, part.x_plus, grid_h)
    return preimage(plus_segs, y_minus).intersection(part.x_plus).without_points()
