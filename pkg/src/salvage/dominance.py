"""Salvage through measure dominance on the marginal-effect axis.

The weight mass on each side of the sign partition is pushed forward
through ``g'`` onto value bins.  When, bin by bin, the negative mass
``mu_minus`` never exceeds the positive mass ``mu_plus``, the negative
weight can be absorbed: every matched bin's positive preimage gets the
constant weight ``(mu_plus - mu_minus) / leb_plus`` and ``X^-`` gets zero.
This keeps ``integral of w * g_n'`` exact for the binned ``g_n'`` and
converges to the original estimand as the bins shrink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .funcspec import RealFn
from .intervals import Interval, IntervalSet
from .link import beta
from .numerics import (
    BISECT_FLOOR,
    CONSTANT,
    DECREASING,
    MonotoneSegment,
    QuadratureResult,
    integrate_intervals,
    invert_on_segment,
    monotone_segments,
    split_at,
)
from .partition import SignPartition, match_set, segment_preimage  # noqa: F401  (match_set re-exported)
from .weights import PiecewiseWeight, WeightPiece

EQUAL_WIDTH = "equal_width"
EQUAL_MEASURE = "equal_measure"
SCHEMES = (EQUAL_WIDTH, EQUAL_MEASURE)
DEFAULT_SCHEME = EQUAL_MEASURE

DOMINATED = "dominated"
VIOLATED = "violated"


@dataclass(frozen=True)
class ValueBins:
    """Half-open value bins ``[y_k, y_k+1)``, the top one closed.

    A constant ``g'`` gives a single degenerate bin ``[y, y]`` with
    ``constant`` set.
    """

    edges: tuple
    requested: int
    scheme: str
    constant: bool = False

    @property
    def n(self) -> int:
        return len(self.edges) - 1

    @property
    def lo(self) -> float:
        return self.edges[0]

    @property
    def hi(self) -> float:
        return self.edges[-1]

    def bin(self, k: int) -> Interval:
        lo, hi = self.edges[k], self.edges[k + 1]
        return Interval(lo, hi, True, k == self.n - 1)

    def locate(self, y):
        """Bin index of each value, ``-1`` outside ``[lo, hi]``."""
        y = np.asarray(y, dtype=float)
        k = np.searchsorted(np.asarray(self.edges), y, side="right") - 1
        k = np.where(y == self.hi, self.n - 1, k)
        return np.where((y < self.lo) | (y > self.hi) | (k < 0) | (k >= self.n), -1, k)

    def to_json(self):
        return {
            "n": self.n,
            "requested": self.requested,
            "scheme": self.scheme,
            "constant": self.constant,
            "range": [self.lo, self.hi],
        }


def _cdf(segments, y):
    """Lebesgue measure of ``{x : g(x) <= y}`` over the segments, for each ``y``."""
    total = np.zeros(np.shape(y))
    for seg in segments:
        iv = seg.interval
        if seg.direction == CONSTANT:
            total += np.where(y >= seg.lo_value, iv.length, 0.0)
            continue
        yc = np.clip(y, seg.value_min, seg.value_max)
        x = invert_on_segment(None, seg, yc)
        x = np.where(y >= seg.value_max, iv.hi if seg.direction != DECREASING else iv.lo, x)
        x = np.where(y < seg.value_min, iv.lo if seg.direction != DECREASING else iv.hi, x)
        total += (x - iv.lo) if seg.direction != DECREASING else (iv.hi - x)
    return total


def _equal_measure_edges(segments, lo, hi, n):
    """Values splitting the domain into ``n`` preimages of equal length.

    The interior edge ``k`` solves ``cdf(y) = k/n * total`` by bisection.  The same target gives the same edge, so the edges for
    ``n`` are a subset of the edges for ``2n``.
    """
    total = math.fsum(s.interval.length for s in segments)
    target = total * (np.arange(1, n) / n)
    a = np.full(n - 1, lo)
    b = np.full(n - 1, hi)
    floor = (hi - lo) * BISECT_FLOOR
    for _ in range(2100):
        m = 0.5 * (a + b)
        active = (m > a) & (m < b) & (b - a > floor)
        if not np.any(active):
            break
        up = _cdf(segments, m) >= target
        a = np.where(active & ~up, m, a)
        b = np.where(active & up, m, b)
    return b


def bin_values(
    g_prime: RealFn,
    X,
    n: int,
    scheme: str = DEFAULT_SCHEME,
    grid_h: Optional[float] = None,
    segments: Optional[Sequence[MonotoneSegment]] = None,
) -> ValueBins:
    """Partition the attained range of ``g'`` over ``X`` into about ``n`` bins.

    ``equal_width`` spaces the edges evenly in value; ``equal_measure``
    chooses them so each bin's preimage has the same length, which keeps
    the preimages narrow where ``g'`` is flat.  Critical values of ``g'``
    are always added as edges, so no preimage straddles a fold, and
    duplicate edges are merged.
    """
    if n < 1:
        raise ValueError("need at least one bin")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown binning scheme {scheme!r}; expected one of {SCHEMES}")
    segs = list(segments) if segments is not None else monotone_segments(g_prime, X, grid_h)
    if not segs:
        raise ValueError("g' has no monotone segments on an empty domain")
    lo = min(s.value_min for s in segs)
    hi = max(s.value_max for s in segs)
    if hi - lo <= 1e-13 * max(1.0, abs(lo)):
        return ValueBins((lo, hi), n, scheme, constant=True)
    if scheme == EQUAL_WIDTH:
        inner = np.linspace(lo, hi, n + 1)[1:-1]
    else:
        inner = _equal_measure_edges(segs, lo, hi, n)
    critical = [v for s in segs for v in (s.lo_value, s.hi_value) if lo < v < hi]
    edges = np.unique(np.concatenate([[lo, hi], inner, critical]))
    return ValueBins(tuple(float(e) for e in edges), n, scheme)


@dataclass(frozen=True)
class BinMeasures:
    index: int
    bin: Interval
    preimage_minus: IntervalSet
    preimage_plus: IntervalSet
    mu_minus: float
    mu_plus: float
    leb_plus: float
    error_minus: float = 0.0
    error_plus: float = 0.0

    @property
    def matched(self) -> bool:
        """The bin's values are attained on a positive-length part of ``X^-``."""
        return self.preimage_minus.measure() > 0

    def tolerance(self, tol: float) -> float:
        return max(tol, 3.0 * (self.error_minus + self.error_plus))

    def violated(self, tol: float) -> bool:
        return self.mu_minus > self.mu_plus + self.tolerance(tol)

    @property
    def omega_tilde_value(self) -> Optional[float]:
        if not self.matched or self.leb_plus <= 0:
            return None
        return (self.mu_plus - self.mu_minus) / self.leb_plus


def _bin_preimages(segments, bins: ValueBins):
    """Per bin, the intervals of the segments mapping into it."""
    out = [[] for _ in range(bins.n)]
    edges = np.asarray(bins.edges)
    for seg in segments:
        if seg.direction == CONSTANT:
            k = int(bins.locate(seg.lo_value))
            if k >= 0:
                out[k].append(seg.interval)
            continue
        vmin, vmax = seg.value_min, seg.value_max
        ks = np.nonzero((edges[:-1] <= vmax) & (edges[1:] >= vmin))[0]
        ys = np.unique(np.concatenate([[vmin, vmax], edges[(edges > vmin) & (edges < vmax)]]))
        cache = dict(zip(ys.tolist(), np.atleast_1d(invert_on_segment(None, seg, ys)).tolist()))

        def inverse(arr, cache=cache):
            return np.array([cache[v] for v in arr.tolist()])

        for k in ks:
            piece = segment_preimage(seg, bins.bin(int(k)), inverse)
            if piece is not None and not piece.is_point:
                out[int(k)].append(piece)
    return [IntervalSet(ivs) for ivs in out]


def induced_measures(
    omega: RealFn,
    g_prime: RealFn,
    part: SignPartition,
    bins: ValueBins,
    tol: float = DEFAULT.quad_tol,
    grid_h: Optional[float] = None,
    minus_segments=None,
    plus_segments=None,
) -> List[BinMeasures]:
    """Preimages and weight masses of every bin on both sides of the partition.

    ``mu_minus = -integral of omega`` over the bin's preimage in ``X^-`` and
    ``mu_plus = integral of omega`` over its preimage in ``X^+``.  All pieces
    are integrated in one batch; each gets a length-proportional share of
    ``tol``.
    """
    if minus_segments is None:
        minus_segments = monotone_segments(g_prime, part.x_minus, grid_h) if part.x_minus else []
    if plus_segments is None:
        plus_segments = monotone_segments(g_prime, part.x_plus, grid_h) if part.x_plus else []
    pre_minus = _bin_preimages(minus_segments, bins)
    pre_plus = _bin_preimages(plus_segments, bins)

    jobs = []  # (bin, side, interval)
    for k in range(bins.n):
        for side, sets in ((0, pre_minus), (1, pre_plus)):
            for iv in split_at(sets[k], omega.breakpoints):
                if not iv.is_point:
                    jobs.append((k, side, iv))
    total = math.fsum(iv.length for _, _, iv in jobs) or 1.0
    results = integrate_intervals(omega, [iv for _, _, iv in jobs], tol=[tol * iv.length / total for _, _, iv in jobs])
    parts = [[[], []] for _ in range(bins.n)]
    errs = [[[], []] for _ in range(bins.n)]
    for (k, side, _), r in zip(jobs, results):
        parts[k][side].append(r.value)
        errs[k][side].append(r.abs_error_estimate)

    out = []
    for k in range(bins.n):
        out.append(
            BinMeasures(
                index=k,
                bin=bins.bin(k),
                preimage_minus=pre_minus[k],
                preimage_plus=pre_plus[k],
                mu_minus=-math.fsum(parts[k][0]),
                mu_plus=math.fsum(parts[k][1]),
                leb_plus=pre_plus[k].measure(),
                error_minus=math.fsum(errs[k][0]),
                error_plus=math.fsum(errs[k][1]),
            )
        )
    return out


def check_dominance(measures: Sequence[BinMeasures], tol: float = DEFAULT.a_tol):
    """``(verdict, violated bin indices)``; a bin is violated when
    ``mu_minus > mu_plus + max(tol, 3 * combined quadrature error)``."""
    violated = [m.index for m in measures if m.violated(tol)]
    return (VIOLATED if violated else DOMINATED), violated


def transform_weights_dominance(
    omega: RealFn,
    part: SignPartition,
    measures: Sequence[BinMeasures],
) -> PiecewiseWeight:
    """Step weights: constant on each matched bin's positive preimage,
    ``omega`` on unmatched bins, zero on ``X^-``."""
    pieces = []
    for m in measures:
        if m.matched:
            value = m.omega_tilde_value
            if value is None:
                raise ValueError(f"bin {m.index} {m.bin} has negative mass but no positive preimage")
            pieces.extend(WeightPiece(iv, f"bin {m.index}", value=value) for iv in m.preimage_plus)
        else:
            pieces.extend(WeightPiece(iv, "omega(x)", fn=omega) for iv in m.preimage_plus)
    pieces.extend(WeightPiece(iv, "0", value=0.0) for iv in part.x_minus)
    return PiecewiseWeight(pieces, support=part.x_plus)


@dataclass
class DominanceReport:
    bins: ValueBins
    measures: List[BinMeasures]
    violated_bins: List[int]
    verdict: str
    omega_tilde_n: Optional[PiecewiseWeight]
    beta_original: QuadratureResult
    mass_original: QuadratureResult
    beta_transformed: Optional[QuadratureResult] = None
    mass_transformed: Optional[QuadratureResult] = None
    tol: float = DEFAULT.a_tol

    @property
    def preservation_residual(self) -> Optional[float]:
        if self.beta_transformed is None:
            return None
        return abs(self.beta_original.value - self.beta_transformed.value)

    @property
    def mass_residual(self) -> Optional[float]:
        if self.mass_transformed is None:
            return None
        return abs(self.mass_original.value - self.mass_transformed.value)

    def to_json(self):
        out = {
            "n": self.bins.requested,
            "bins": self.bins.to_json(),
            "verdict": self.verdict,
            "violated_bins": list(self.violated_bins),
            "violated_ranges": [self.measures[k].bin.to_json() for k in self.violated_bins],
            "beta_original": self.beta_original.value,
            "beta_transformed": None if self.beta_transformed is None else self.beta_transformed.value,
            "mass_original": self.mass_original.value,
            "mass_transformed": None if self.mass_transformed is None else self.mass_transformed.value,
            "preservation_residual": self.preservation_residual,
            "mass_residual": self.mass_residual,
        }
        if self.omega_tilde_n is not None:
            out["nonneg_certificate"] = self.omega_tilde_n.nonneg_certificate
        return out

    CSV_COLUMNS = ("bin_lo", "bin_hi", "mu_minus", "mu_plus", "leb_plus", "omega_tilde_value", "violated")

    def csv_rows(self):
        bad = set(self.violated_bins)
        for m in self.measures:
            yield (m.bin.lo, m.bin.hi, m.mu_minus, m.mu_plus, m.leb_plus, m.omega_tilde_value, int(m.index in bad))


def refine(
    omega: RealFn,
    g_prime: RealFn,
    part: SignPartition,
    n_schedule: Sequence[int] = DEFAULT.n_schedule,
    tols: Tolerances = DEFAULT,
    scheme: str = DEFAULT_SCHEME,
    grid_h: Optional[float] = None,
) -> List[DominanceReport]:
    """Run the binned construction for each bin count in ``n_schedule``.

    When dominance holds, each report carries the step weights and the
    residuals ``|integral of omega g' - integral of w_n g'|`` and the
    same for total mass, so convergence can be read off the sequence.
    """
    X = part.domain
    segs = monotone_segments(g_prime, X, grid_h)
    minus_segs = monotone_segments(g_prime, part.x_minus, grid_h) if part.x_minus else []
    plus_segs = monotone_segments(g_prime, part.x_plus, grid_h) if part.x_plus else []
    beta_orig = beta(omega, g_prime, X, tols.quad_tol)
    mass_orig = beta(omega, None, X, tols.quad_tol)
    rest = part.x_minus.complement(X)
    reports = []
    for n in n_schedule:
        bins = bin_values(g_prime, X, n, scheme, segments=segs)
        measures = induced_measures(
            omega, g_prime, part, bins, tols.quad_tol,
            minus_segments=minus_segs, plus_segments=plus_segs,
        )
        verdict, violated = check_dominance(measures, tols.a_tol)
        report = DominanceReport(bins, measures, violated, verdict, None, beta_orig, mass_orig, tol=tols.a_tol)
        if verdict == DOMINATED:
            w = transform_weights_dominance(omega, part, measures)
            report.omega_tilde_n = w
            report.beta_transformed = beta(w, g_prime, rest, tols.quad_tol)
            report.mass_transformed = beta(w, None, rest, tols.quad_tol)
        reports.append(report)
    return reports


def salvage_dominance(
    omega: RealFn,
    g_prime: RealFn,
    part: SignPartition,
    n: int = DEFAULT.bins,
    tols: Tolerances = DEFAULT,
    scheme: str = DEFAULT_SCHEME,
) -> DominanceReport:
    """The binned construction at a single bin count."""
    return refine(omega, g_prime, part, [n], tols, scheme)[0]
