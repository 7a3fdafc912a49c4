"""Reference computations that share no code with the package.

Exact rational polynomial arithmetic (coefficient lists, lowest degree
first) and brute-force midpoint sums on fine uniform grids.
"""

import math
from fractions import Fraction

import numpy as np


def padd(p, q):
    n = max(len(p), len(q))
    p = list(p) + [Fraction(0)] * (n - len(p))
    q = list(q) + [Fraction(0)] * (n - len(q))
    return [a + b for a, b in zip(p, q)]


def pmul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def pscale(p, c):
    return [Fraction(c) * a for a in p]


def pderiv(p):
    return [k * a for k, a in enumerate(p)][1:] or [Fraction(0)]


def pint(p, a, b):
    """Exact integral of p over [a, b]."""
    a, b = Fraction(a), Fraction(b)
    return sum(c / (k + 1) * (b ** (k + 1) - a ** (k + 1)) for k, c in enumerate(p))


def poly(*coeffs):
    return [Fraction(c) for c in coeffs]


# the cubic link of the example2 fixture: Q(x) = 2 - x + 12x^2 - 12x^3
Q = poly(2, -1, 12, -12)
OMEGA = poly(-1, 1)  # x - 1
ONE = poly(1)


def example2_a3():
    """integral over [0, 1] of (x - 1)(1 - Q'(x)) Q(x)."""
    return pint(pmul(pmul(OMEGA, padd(ONE, pscale(pderiv(Q), -1))), Q), 0, 1)


def example2_a4():
    """integral over [0, 1] of (x - 1)(1 - Q'(x))."""
    return pint(pmul(OMEGA, padd(ONE, pscale(pderiv(Q), -1))), 0, 1)


def q_critical_points():
    """Roots of Q'(x) = -1 + 24x - 36x^2 by the quadratic formula."""
    a, b, c = -36.0, 24.0, -1.0
    d = math.sqrt(b * b - 4 * a * c)
    return sorted(((-b + d) / (2 * a), (-b - d) / (2 * a)))


def q_value(x):
    return 2 - x + 12 * x**2 - 12 * x**3


def phi(x):
    return np.exp(-0.5 * np.asarray(x) ** 2) / math.sqrt(2 * math.pi)


def midpoint_bin_masses(omega, g_prime, lo, hi, edges, points=2**20, chunk=2**18):
    """Per value bin ``[e_k, e_k+1)`` (top closed): negative and positive
    weight mass by a midpoint sum on ``points`` cells of ``[lo, hi]``."""
    edges = np.asarray(edges, dtype=float)
    nb = len(edges) - 1
    h = (hi - lo) / points
    neg = np.zeros(nb)
    pos = np.zeros(nb)
    for start in range(0, points, chunk):
        x = lo + (np.arange(start, min(points, start + chunk)) + 0.5) * h
        w = omega(x)
        k = np.clip(np.searchsorted(edges, g_prime(x), side="right") - 1, 0, nb - 1)
        neg += np.bincount(k, weights=np.where(w < 0, -w, 0.0) * h, minlength=nb)
        pos += np.bincount(k, weights=np.where(w >= 0, w, 0.0) * h, minlength=nb)
    return neg, pos
