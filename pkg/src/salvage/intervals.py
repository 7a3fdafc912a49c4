"""Intervals and finite unions of disjoint intervals on the extended real line.

Endpoints may be infinite; an infinite endpoint is always open.  Degenerate
closed intervals ``[a, a]`` (single points) are allowed, empty intervals are
never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

INF = math.inf


def _start_key(lo, lo_closed):
    # a closed start comes before an open start at the same location
    return (lo, 0 if lo_closed else 1)


def _end_key(hi, hi_closed):
    # an open end comes before a closed end at the same location
    return (hi, 1 if hi_closed else 0)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if math.isinf(lo):
            object.__setattr__(self, "lo_closed", False)
        if math.isinf(hi):
            object.__setattr__(self, "hi_closed", False)
        if not _nonempty(self.lo, self.hi, self.lo_closed, self.hi_closed):
            raise ValueError(f"empty interval {self._fmt()}")

    @classmethod
    def closed(cls, lo, hi):
        return cls(lo, hi, True, True)

    @classmethod
    def half_open(cls, lo, hi):
        """``[lo, hi)``"""
        return cls(lo, hi, True, False)

    @classmethod
    def point(cls, x):
        return cls(x, x, True, True)

    @classmethod
    def make(cls, lo, hi, lo_closed=True, hi_closed=True) -> Optional["Interval"]:
        """Like the constructor but returns ``None`` instead of raising on empty input."""
        lo_closed = lo_closed and not math.isinf(lo)
        hi_closed = hi_closed and not math.isinf(hi)
        if not _nonempty(lo, hi, lo_closed, hi_closed):
            return None
        return cls(lo, hi, lo_closed, hi_closed)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def closure(self) -> "Interval":
        return Interval(self.lo, self.hi, True, True)

    def contains(self, x):
        """Membership test; vectorized over numpy arrays."""
        x = np.asarray(x, dtype=float)
        left = x >= self.lo if self.lo_closed else x > self.lo
        right = x <= self.hi if self.hi_closed else x < self.hi
        out = left & right
        return bool(out) if out.ndim == 0 else out

    def __contains__(self, x):
        return bool(self.contains(x))

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo, lo_closed = max(
            (self.lo, self.lo_closed), (other.lo, other.lo_closed), key=lambda e: _start_key(*e)
        )
        hi, hi_closed = min(
            (self.hi, self.hi_closed), (other.hi, other.hi_closed), key=lambda e: _end_key(*e)
        )
        return Interval.make(lo, hi, lo_closed, hi_closed)

    def _fmt(self):
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{_fmt_num(self.lo)}, {_fmt_num(self.hi)}{right}"

    def __str__(self):
        if self.is_point:
            return "{" + _fmt_num(self.lo) + "}"
        return self._fmt()

    def to_json(self):
        return {
            "lo": _json_num(self.lo),
            "hi": _json_num(self.hi),
            "lo_closed": self.lo_closed,
            "hi_closed": self.hi_closed,
        }


def _nonempty(lo, hi, lo_closed, hi_closed):
    if lo < hi:
        return True
    return lo == hi and lo_closed and hi_closed and math.isfinite(lo)


def _fmt_num(v):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return f"{v:.12g}"


def _json_num(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


class IntervalSet:
    """Sorted finite union of pairwise disjoint, non-touching intervals.

    Construction normalizes its input: empty pieces are dropped and
    overlapping or touching pieces are merged.
    """

    __slots__ = ("_intervals",)

    def __init__(self, intervals: Iterable[Optional[Interval]] = ()):
        self._intervals = tuple(_normalize([iv for iv in intervals if iv is not None]))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def of(cls, lo, hi, lo_closed=True, hi_closed=True) -> "IntervalSet":
        return cls([Interval.make(lo, hi, lo_closed, hi_closed)])

    @property
    def intervals(self) -> tuple:
        return self._intervals

    def __iter__(self) -> Iterator[Interval]:
        return iter(self._intervals)

    def __len__(self):
        return len(self._intervals)

    def __getitem__(self, i):
        return self._intervals[i]

    def __bool__(self):
        return bool(self._intervals)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self._intervals == other._intervals

    def __hash__(self):
        return hash(self._intervals)

    def __repr__(self):
        return f"IntervalSet({list(self._intervals)!r})"

    def __str__(self):
        if not self._intervals:
            return "{}"
        return " U ".join(str(iv) for iv in self._intervals)

    @property
    def is_empty(self) -> bool:
        return not self._intervals

    def measure(self) -> float:
        """Lebesgue measure (sum of lengths)."""
        return math.fsum(iv.length for iv in self._intervals)

    @property
    def lo(self) -> float:
        return self._intervals[0].lo if self._intervals else math.nan

    @property
    def hi(self) -> float:
        return self._intervals[-1].hi if self._intervals else math.nan

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = locate(self._intervals, x) >= 0
        return bool(out) if out.ndim == 0 else out

    def __contains__(self, x):
        return bool(self.contains(x))

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self._intervals + tuple(other))

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        a, b = self._intervals, tuple(other)
        i = j = 0
        while i < len(a) and j < len(b):
            piece = a[i].intersect(b[j])
            if piece is not None:
                out.append(piece)
            # advance whichever ends first
            if _end_key(a[i].hi, a[i].hi_closed) < _end_key(b[j].hi, b[j].hi_closed):
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def complement(self, parent: Optional["IntervalSet"] = None) -> "IntervalSet":
        """Complement within ``parent`` (the whole real line by default)."""
        gaps = []
        lo, lo_closed = -INF, False
        for iv in self._intervals:
            gaps.append(Interval.make(lo, iv.lo, lo_closed, not iv.lo_closed))
            lo, lo_closed = iv.hi, not iv.hi_closed
        gaps.append(Interval.make(lo, INF, lo_closed, False))
        comp = IntervalSet(gaps)
        return comp if parent is None else comp.intersection(parent)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return other.complement(self)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def without_points(self) -> "IntervalSet":
        """Drop degenerate (single point) components."""
        return IntervalSet(iv for iv in self._intervals if not iv.is_point)

    def clip(self, lo, hi) -> "IntervalSet":
        return self.intersection(IntervalSet.of(lo, hi))

    def breakpoints(self) -> list:
        pts = []
        for iv in self._intervals:
            pts.extend((iv.lo, iv.hi))
        return pts

    def grid(self, n: int, include_open=False) -> np.ndarray:
        """About ``n`` points spread over the set in proportion to component length.

        Closed endpoints are included; open endpoints are skipped unless
        ``include_open``.  Degenerate components contribute their single point.
        """
        comps = [iv for iv in self._intervals if iv.is_finite]
        if not comps:
            return np.empty(0)
        total = sum(iv.length for iv in comps)
        parts = []
        for iv in comps:
            if iv.is_point:
                parts.append(np.array([iv.lo]))
                continue
            k = max(2, int(round(n * iv.length / total))) if total > 0 else 2
            pts = np.linspace(iv.lo, iv.hi, k)
            if not include_open:
                if not iv.lo_closed:
                    pts = pts[1:]
                if not iv.hi_closed:
                    pts = pts[:-1]
            parts.append(pts)
        return np.concatenate(parts) if parts else np.empty(0)

    def to_json(self):
        return [iv.to_json() for iv in self._intervals]


def _normalize(intervals):
    if not intervals:
        return []
    ivs = sorted(intervals, key=lambda iv: _start_key(iv.lo, iv.lo_closed))
    out = [ivs[0]]
    for iv in ivs[1:]:
        cur = out[-1]
        touches = iv.lo < cur.hi or (iv.lo == cur.hi and (cur.hi_closed or iv.lo_closed))
        if touches:
            hi, hi_closed = max(
                (cur.hi, cur.hi_closed), (iv.hi, iv.hi_closed), key=lambda e: _end_key(*e)
            )
            out[-1] = Interval(cur.lo, hi, cur.lo_closed, hi_closed)
        else:
            out.append(iv)
    return out


def locate(intervals, x) -> np.ndarray:
    """Index of the interval containing each ``x`` (``-1`` when none does).

    ``intervals`` must be sorted and pairwise disjoint.
    """
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -1, dtype=int)
    if not len(intervals):
        return out
    los = np.array([iv.lo for iv in intervals])
    his = np.array([iv.hi for iv in intervals])
    lc = np.array([iv.lo_closed for iv in intervals])
    hc = np.array([iv.hi_closed for iv in intervals])
    idx = np.searchsorted(los, x, side="right") - 1
    # at a shared endpoint the candidate may be open there while its left
    # neighbour is closed, so test both
    for shift in (1, 0):
        cand = np.clip(idx - shift, 0, None)
        valid = (idx - shift) >= 0
        inside = (
            np.where(lc[cand], x >= los[cand], x > los[cand])
            & np.where(hc[cand], x <= his[cand], x < his[cand])
            & valid
        )
        out = np.where(inside, cand, out)
    return out
