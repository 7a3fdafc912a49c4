"""Piecewise transformed weight functions."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import QuadratureError
from .funcspec import RealFn
from .intervals import Interval, IntervalSet, locate
from .numerics import DEFAULT_ABS_TOL, QuadratureResult, integrate_intervals, split_at

CERTIFICATE_POINTS = 4096


@dataclass(frozen=True)
class WeightPiece:
    """One piece of a transformed weight: a formula ``fn`` or a constant ``value``."""

    interval: Interval
    label: str
    fn: Optional[Callable] = None
    value: Optional[float] = None

    def __call__(self, x):
        if self.fn is None:
            return np.full(np.shape(x), self.value, dtype=float)
        return np.asarray(self.fn(x), dtype=float)

    def to_json(self):
        out = {"interval": self.interval.to_json(), "label": self.label}
        if self.value is not None:
            out["value"] = self.value
        return out


class PiecewiseWeight:
    """Transformed weights as ordered, disjoint pieces; zero off the pieces.

    ``support`` is where the weight may be nonzero and
    ``nonneg_certificate`` is its minimum over a sample grid on the support
    (and over every constant piece).
    """

    def __init__(self, pieces: Sequence[WeightPiece], support: Optional[IntervalSet] = None):
        pieces = sorted(pieces, key=lambda p: (p.interval.lo, not p.interval.lo_closed))
        for a, b in zip(pieces, pieces[1:]):
            if a.interval.intersect(b.interval) is not None:
                raise ValueError(f"overlapping weight pieces {a.interval} and {b.interval}")
        self.pieces = tuple(pieces)
        self._intervals = tuple(p.interval for p in self.pieces)
        if support is None:
            support = IntervalSet(p.interval for p in self.pieces if not (p.fn is None and p.value == 0))
        self.support = support
        self.nonneg_certificate = self._certificate()

    def _certificate(self):
        if self.support.is_empty:
            return 0.0
        xs = self.support.grid(CERTIFICATE_POINTS)
        vals = [float(np.min(self(xs)))] if xs.size else []
        vals.extend(p.value for p in self.pieces if p.fn is None and p.interval.length > 0
                    and self.support.contains(p.interval.midpoint))
        return min(vals) if vals else 0.0

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        idx = locate(self._intervals, arr)
        out = np.zeros(arr.shape)
        for k in np.unique(idx):
            if k < 0:
                continue
            sel = idx == k
            out[sel] = self.pieces[k](arr[sel])
        return float(out) if arr.ndim == 0 else out

    def integrate(
        self,
        g: Optional[Callable] = None,
        tol: float = DEFAULT_ABS_TOL,
        within: Optional[IntervalSet] = None,
    ) -> QuadratureResult:
        """``integral of w * g`` (or of ``w`` alone) over the pieces, optionally within a set."""
        g_bps = g.breakpoints if isinstance(g, RealFn) else []
        work = []  # (piece, interval)
        for p in self.pieces:
            if p.fn is None and p.value == 0:
                continue
            region = IntervalSet([p.interval])
            if within is not None:
                region = region.intersection(within)
            if any(not iv.is_finite for iv in region):
                raise QuadratureError(f"weight piece {p.interval} is unbounded")
            bps = list(g_bps) + (p.fn.breakpoints if isinstance(p.fn, RealFn) else [])
            for iv in split_at(region, bps):
                if not iv.is_point:
                    work.append((p, iv))
        if not work:
            return QuadratureResult(0.0, 0.0, 0)
        total = math.fsum(iv.length for _, iv in work)
        groups = defaultdict(list)
        for p, iv in work:
            groups[id(p.fn) if p.fn is not None else "const"].append((p, iv))
        value_parts, err_parts, noise_parts, nsub = [], [], [], 0
        for key in sorted(groups, key=str):
            items = groups[key]
            ivs = [iv for _, iv in items]
            shares = [tol * iv.length / total for iv in ivs]
            if key == "const":
                if g is None:
                    for p, iv in items:
                        value_parts.append(p.value * iv.length)
                    continue
                res = integrate_intervals(g, ivs, tol=[s / max(abs(p.value), 1e-300) for s, (p, _) in zip(shares, items)])
                for (p, _), r in zip(items, res):
                    value_parts.append(p.value * r.value)
                    err_parts.append(abs(p.value) * r.abs_error_estimate)
                    noise_parts.append(abs(p.value) * r.roundoff)
                    nsub += r.subdivisions
            else:
                fn = items[0][0].fn
                integrand = fn if g is None else (lambda x, fn=fn: np.asarray(fn(x)) * np.asarray(g(x)))
                for r in integrate_intervals(integrand, ivs, tol=shares):
                    value_parts.append(r.value)
                    err_parts.append(r.abs_error_estimate)
                    noise_parts.append(r.roundoff)
                    nsub += r.subdivisions
        err = math.fsum(err_parts)
        noise = math.fsum(noise_parts)
        if err - noise > tol:
            raise QuadratureError(f"error estimate {err:.3g} exceeds tolerance {tol:.3g}")
        return QuadratureResult(math.fsum(value_parts), err, nsub, noise)

    def to_json(self):
        return {
            "pieces": [p.to_json() for p in self.pieces],
            "support": self.support.to_json(),
            "nonneg_certificate": self.nonneg_certificate,
        }
