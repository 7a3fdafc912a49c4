"""Salvage through an injective link function.

A link ``Q`` pairs each negative-weight point ``x`` with ``Q(x)`` in the
nonnegative region so that the marginal effect agrees there and the paired
weights sum to a nonnegative net weight.  The transformed weight adds
``omega(Q^{-1}(x))`` onto the image ``Q(X^-)`` and zeroes ``X^-``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import LinkError
from .expr import Expr
from .funcspec import RealFn, parse
from .intervals import Interval, IntervalSet
from .numerics import (
    QuadratureResult,
    ZERO,
    integrate,
    invert_on_segment,
    monotone_segments,
)
from .partition import SignPartition
from .weights import PiecewiseWeight, WeightPiece

NOT_INJECTIVE = "not_injective"
IMAGE_ESCAPE = "image_escape"
PARTIAL_COVERAGE = "partial_coverage"


@dataclass(frozen=True)
class Finding:
    kind: str
    message: str
    witness: Optional[float] = None
    witness_value: Optional[float] = None
    detail: dict = field(default_factory=dict)

    def to_json(self):
        out = {"kind": self.kind, "message": self.message}
        if self.witness is not None:
            out["witness"] = self.witness
            out["witness_value"] = self.witness_value
        out.update(self.detail)
        return out


@dataclass(frozen=True)
class LinkFn:
    """A link function restricted to (a branch of) the negative-weight region.

    ``coverage`` is the part of ``X^-`` the link is used on: all of it, or a
    single monotone branch when a branch was selected.
    """

    q: RealFn
    q_prime: RealFn
    segments: tuple
    image: IntervalSet
    coverage: IntervalSet
    injective: bool
    warnings: tuple = ()

    def inverse(self, y):
        """``Q^{-1}`` on the image (vectorized); requires an injective link."""
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape, math.nan)
        for seg in self.segments:
            sel = seg.image().contains(y) & np.isnan(out)
            if np.any(sel):
                out[sel] = invert_on_segment(None, seg, y[sel])
        return float(out) if out.ndim == 0 else out


def make_link(
    q: Union[RealFn, Expr, str],
    part: SignPartition,
    branch: Optional[int] = None,
    grid_h: Optional[float] = None,
    params=None,
) -> LinkFn:
    """Restrict ``q`` to ``X^-`` and decompose it into monotone branches.

    The link counts as injective when every branch is strictly monotone and
    the branch images do not overlap.  ``branch=k`` keeps only branch ``k``
    and shrinks the covered region accordingly.
    """
    x_minus = part.x_minus
    closure = IntervalSet(iv.closure() for iv in x_minus)
    if isinstance(q, str):
        q = parse(q, params)
    elif isinstance(q, Expr):
        q = RealFn.single(q, Interval(-math.inf, math.inf, False, False))
    if x_minus.is_empty:
        return LinkFn(q, q.derivative(), (), IntervalSet.empty(), IntervalSet.empty(), True)
    q = q.with_domain(closure)
    segs = monotone_segments(q, x_minus, grid_h)
    warnings = []
    if branch is not None:
        if not 0 <= branch < len(segs):
            raise LinkError(f"branch {branch} does not exist; the link has {len(segs)} monotone segments")
        segs = [segs[branch]]
        warnings.append(
            f"link restricted to monotone segment {branch} ({segs[0].interval}); "
            "coverage of the negative-weight region is partial"
        )
    injective = all(s.strict for s in segs) and not _images_overlap(segs)
    image = IntervalSet(s.image() for s in segs)
    coverage = IntervalSet(s.interval for s in segs)
    return LinkFn(q, q.derivative(), tuple(segs), image, coverage, injective, tuple(warnings))


def _images_overlap(segs):
    ims = sorted((s.value_min, s.value_max) for s in segs)
    return any(b_lo < a_hi for (_, a_hi), (b_lo, _) in zip(ims, ims[1:]))


@dataclass
class ConditionReport:
    a1_sup_residual: float
    a2_min: float
    a3_integral: QuadratureResult
    a4_integral: QuadratureResult
    verdicts: dict
    # orientation-aware variants using |Q'| (agree with the above for increasing Q)
    a3_abs_jacobian: QuadratureResult = ZERO
    a4_abs_jacobian: QuadratureResult = ZERO
    a1_witness: Optional[float] = None
    a2_witness: Optional[float] = None
    findings: List[Finding] = field(default_factory=list)
    extrapolated: bool = False

    @property
    def all_pass(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())

    def to_json(self):
        return {
            "a1_sup_residual": self.a1_sup_residual,
            "a2_min": self.a2_min,
            "a3_integral": self.a3_integral.value,
            "a3_error": self.a3_integral.abs_error_estimate,
            "a4_integral": self.a4_integral.value,
            "a4_error": self.a4_integral.abs_error_estimate,
            "verdicts": dict(self.verdicts),
        }

    def diagnostics_json(self):
        return {
            "a1_witness": self.a1_witness,
            "a2_witness": self.a2_witness,
            "a3_abs_jacobian_integral": self.a3_abs_jacobian.value,
            "a3_abs_jacobian_error": self.a3_abs_jacobian.abs_error_estimate,
            "a4_abs_jacobian_integral": self.a4_abs_jacobian.value,
            "a4_abs_jacobian_error": self.a4_abs_jacobian.abs_error_estimate,
            "extrapolated": self.extrapolated,
            "findings": [f.to_json() for f in self.findings],
        }


def _integral_passes(res: QuadratureResult, tol: float) -> bool:
    return abs(res.value) <= max(tol, 3.0 * res.abs_error_estimate)


def _collision(segs):
    """Two distinct points of ``X^-`` with the same link value, or ``None``."""
    for s in segs:
        if not s.strict and s.interval.length > 0:
            return s.interval.lo, s.interval.midpoint, s.lo_value
    for i, a in enumerate(segs):
        for b in segs[i + 1:]:
            lo, hi = max(a.value_min, b.value_min), min(a.value_max, b.value_max)
            if lo < hi:
                y = 0.5 * (lo + hi)
                return float(invert_on_segment(None, a, y)), float(invert_on_segment(None, b, y)), y
    return None


def _escape_finding(link: LinkFn, part: SignPartition, xs: np.ndarray) -> Optional[Finding]:
    ends = [v for s in link.segments for v in (s.interval.lo, s.interval.hi)]
    pts = np.unique(np.concatenate([xs, ends]))
    qv = np.asarray(link.q(pts, extend=True), dtype=float)
    inside = part.x_plus.contains(qv)
    # distance to the nearest point of X^+
    dist = np.full(qv.shape, math.inf)
    for iv in part.x_plus:
        dist = np.minimum(dist, np.maximum(iv.lo - qv, 0) + np.maximum(qv - iv.hi, 0))
    dist = np.where(inside, 0.0, dist)
    bad = dist > 1e-12 * (1.0 + np.abs(qv))
    if not np.any(bad):
        return None
    k = int(np.argmax(np.where(bad, dist, -1.0)))
    return Finding(
        IMAGE_ESCAPE,
        f"link image escapes X+: Q({pts[k]:.6g}) = {qv[k]:.6g} lies outside {part.x_plus}",
        witness=float(pts[k]),
        witness_value=float(qv[k]),
        detail={"max_distance": float(dist[k])},
    )


def check_link(
    omega: RealFn,
    g_prime: RealFn,
    link: LinkFn,
    part: SignPartition,
    tols: Tolerances = DEFAULT,
    strict: bool = True,
) -> ConditionReport:
    """Compute the four link-condition residuals.

    The two pointwise conditions are checked on a grid of
    ``tols.grid_points`` points over the covered region; the two integral
    conditions by quadrature.  Structural problems (non-injective link,
    image leaving ``X^+``) are collected as findings; with ``strict`` they
    raise :class:`LinkError` carrying the full report.  When the image
    escapes, functions are extrapolated from their nearest piece so the
    residuals can still be reported.
    """
    cover = link.coverage
    if cover.is_empty:
        verdicts = {k: "pass" for k in ("A1", "A2", "A3", "A4")}
        return ConditionReport(0.0, 0.0, ZERO, ZERO, verdicts)

    findings = []
    if not link.injective:
        hit = _collision(link.segments)
        message = f"link not injective: {len(link.segments)} monotone segments on X-"
        detail = {"segments": [s.to_json() for s in link.segments]}
        if hit is not None:
            message += f"; Q({hit[0]:.6g}) = Q({hit[1]:.6g}) = {hit[2]:.6g}"
            detail["pair"] = [hit[0], hit[1]]
        findings.append(
            Finding(
                NOT_INJECTIVE, message,
                witness=None if hit is None else hit[1],
                witness_value=None if hit is None else hit[2],
                detail=detail,
            )
        )
    xs = cover.grid(tols.grid_points)
    escape = _escape_finding(link, part, xs)
    if escape is not None:
        findings.append(escape)
    for w in link.warnings:
        findings.append(Finding(PARTIAL_COVERAGE, w))
    extend = escape is not None

    qx = link.q(xs)
    gq = g_prime(qx, extend=extend)
    a1 = np.abs(g_prime(xs) - gq)
    a2 = omega(xs) + omega(qx, extend=extend)
    k1, k2 = int(np.argmax(a1)), int(np.argmin(a2))

    bps = omega.breakpoints + g_prime.breakpoints + link.q.breakpoints
    qp = link.q_prime
    a3 = integrate(lambda x: omega(x) * (1.0 - qp(x)) * g_prime(x), cover, tols.quad_tol, bps)
    a4 = integrate(lambda x: omega(x) * (1.0 - qp(x)), cover, tols.quad_tol, bps)
    a3_abs = integrate(lambda x: omega(x) * (1.0 - np.abs(qp(x))) * g_prime(x), cover, tols.quad_tol, bps)
    a4_abs = integrate(lambda x: omega(x) * (1.0 - np.abs(qp(x))), cover, tols.quad_tol, bps)

    a1_sup, a2_min = float(a1[k1]), float(a2[k2])
    verdicts = {
        "A1": "pass" if a1_sup <= tols.a_tol else "fail",
        "A2": "pass" if a2_min >= -tols.a_tol else "fail",
        "A3": "pass" if _integral_passes(a3, tols.a_tol) else "fail",
        "A4": "pass" if _integral_passes(a4, tols.a_tol) else "fail",
    }
    report = ConditionReport(
        a1_sup, a2_min, a3, a4, verdicts,
        a3_abs_jacobian=a3_abs, a4_abs_jacobian=a4_abs,
        a1_witness=float(xs[k1]), a2_witness=float(xs[k2]),
        findings=findings, extrapolated=extend,
    )
    fatal = [f for f in findings if f.kind in (NOT_INJECTIVE, IMAGE_ESCAPE)]
    if strict and fatal:
        raise LinkError(fatal[0].message, findings, report)
    return report


def transform_weights_link(omega: RealFn, link: LinkFn, part: SignPartition) -> PiecewiseWeight:
    """Transformed weights: ``omega(Q^-1(x)) + omega(x)`` on the image,
    ``omega`` on the rest of ``X^+`` and zero on ``X^-``."""
    if not link.injective:
        raise LinkError("link not injective; select a branch first")
    pieces = []
    image = link.image.intersection(part.x_plus)
    if link.image.measure() - image.measure() > 1e-12 * max(1.0, link.image.measure()):
        raise LinkError(f"link image escapes X+: {link.image} is not inside {part.x_plus}")
    for seg in link.segments:
        seg_image = IntervalSet([seg.image()]).intersection(part.x_plus)
        fn = _paired_weight(omega, seg)
        for iv in seg_image:
            pieces.append(WeightPiece(iv, "omega(Qinv(x)) + omega(x)", fn=fn))
    for iv in part.x_plus.difference(image):
        pieces.append(WeightPiece(iv, "omega(x)", fn=omega))
    for iv in part.x_minus:
        pieces.append(WeightPiece(iv, "0", value=0.0))
    return PiecewiseWeight(pieces, support=part.x_plus)


def _paired_weight(omega, seg) -> Callable:
    def fn(y):
        return np.asarray(omega(invert_on_segment(None, seg, y)), dtype=float) + np.asarray(omega(y))

    return fn


def beta(
    w: Union[RealFn, PiecewiseWeight],
    g_prime: Optional[Callable],
    S: IntervalSet,
    tol: float = DEFAULT.quad_tol,
) -> QuadratureResult:
    """``integral over S of w * g'`` (the weighted-average estimand).

    With ``g_prime=None`` this is the total weight mass.
    """
    if isinstance(S, Interval):
        S = IntervalSet([S])
    if isinstance(w, PiecewiseWeight):
        return w.integrate(g_prime, tol, within=S)
    bps = list(w.breakpoints) if isinstance(w, RealFn) else []
    if g_prime is None:
        return integrate(w, S, tol, bps)
    if isinstance(g_prime, RealFn):
        bps += g_prime.breakpoints
    return integrate(lambda x: w(x) * g_prime(x), S, tol, bps)


@dataclass(frozen=True)
class PreservationCheck:
    beta_original: QuadratureResult
    beta_transformed: QuadratureResult
    mass_original: QuadratureResult
    mass_transformed: QuadratureResult

    @property
    def beta_residual(self) -> float:
        return abs(self.beta_original.value - self.beta_transformed.value)

    @property
    def mass_residual(self) -> float:
        return abs(self.mass_original.value - self.mass_transformed.value)

    def __iter__(self):
        return iter((self.beta_residual, self.mass_residual))

    def to_json(self):
        return {
            "beta_original": self.beta_original.value,
            "beta_transformed": self.beta_transformed.value,
            "mass_original": self.mass_original.value,
            "mass_transformed": self.mass_transformed.value,
            "beta_residual": self.beta_residual,
            "mass_residual": self.mass_residual,
        }


def verify_preservation(
    omega: RealFn,
    omega_tilde: PiecewiseWeight,
    g_prime: RealFn,
    X: IntervalSet,
    part: SignPartition,
    tol: float = DEFAULT.quad_tol,
) -> PreservationCheck:
    """Estimand and mass before and after the transformation.

    Unpacks as ``(beta_residual, mass_residual)``.
    """
    rest = part.x_minus.complement(X)
    return PreservationCheck(
        beta(omega, g_prime, X, tol),
        beta(omega_tilde, g_prime, rest, tol),
        beta(omega, None, X, tol),
        beta(omega_tilde, None, rest, tol),
    )
