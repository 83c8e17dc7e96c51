"""Integral-recurrence evaluation of TB-splines from a global weight system.

Slow, and used only as an independent test oracle for the extraction-based
construction.  Supported spaces are those with explicit positive weights:
distinct simple real roots (exponential weights) and the cycloidal space.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .ect import RootVector
from .errors import UnsupportedWeights
from .tbspline import KnotVector

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-12


def weight_system(space: RootVector, center: float = 0.0) -> list:
    """Weights ``w_0..w_p`` as callables; positive multiples of the textbook ones.

    Weights are centred at ``center``, which only rescales them and keeps the
    exponentials moderate on the knot range.
    """
    p = space.degree
    roots = space.roots
    if space.all_real and all(r.multiplicity == 1 for r in roots):
        alphas = [r.alpha for r in roots]
        ell = len(alphas)
        rates = [0.0] * (p - ell + 1)
        prev = 0.0
        for a in alphas:
            rates.append(a - prev)
            prev = a
        return [(lambda x, c=c: math.exp(c * (x - center))) for c in rates]
    if space.is_cycloidal():
        beta = roots[0].beta
        w = [(lambda x: 1.0)] * (p - 1)
        w.append(lambda x: math.cos(beta * (x - center)))
        w.append(lambda x: 1.0 / math.cos(beta * (x - center)) ** 2)
        return w
    raise UnsupportedWeights(f"no explicit weight system for {space.describe()}")


class RecurrenceOracle:
    """TB-splines ``N_{k,p}`` by the integral recurrence with adaptive quadrature."""

    def __init__(self, space: RootVector, knots: KnotVector):
        self.space = space
        self.p = space.degree
        self.xi = np.asarray(knots.knots, dtype=float)
        self.a, self.b = float(self.xi[0]), float(self.xi[-1])
        if space.is_cycloidal():
            beta = space.roots[0].beta
            if self.b - self.a >= math.pi / beta:
                raise UnsupportedWeights("cycloidal weights need the knot range shorter than pi/beta")
        self.w = weight_system(space, 0.5 * (self.a + self.b))
        self.breaks = np.unique(self.xi)
        self.N = lru_cache(maxsize=None)(self._N)
        self.F = lru_cache(maxsize=None)(self._F)
        self.d = lru_cache(maxsize=None)(self._d)
        self._spans = {}

    def _N(self, k: int, q: int, x: float) -> float:
        xi = self.xi
        if q == 0:
            inside = xi[k] <= x < xi[k + 1] or (x == self.b and xi[k] < xi[k + 1] == self.b)
            return self.w[self.p](x) if inside else 0.0
        return self.w[self.p - q](x) * (self._ratio(k, q - 1, x) - self._ratio(k + 1, q - 1, x))

    def _ratio(self, j: int, q: int, x: float) -> float:
        """``int_a^x N_{j,q} / d_{j,q}`` with the step convention for ``d = 0``."""
        d = self.d(j, q)
        if d == 0.0:
            # step convention; at b the left limit is used
            t = self.xi[j + q + 1]
            return 1.0 if x >= t and t < self.b else 0.0
        return self.F(j, q, x) / d

    def _support(self, k: int, q: int):
        return float(self.xi[k]), float(self.xi[k + q + 1])

    def _F(self, k: int, q: int, x: float) -> float:
        lo, hi = self._support(k, q)
        x = min(x, hi)
        if x <= lo:
            return 0.0
        # integrate span by span; the integrand is smooth inside each span
        pts = [t for t in self.breaks if lo <= t <= x]
        if pts[-1] < x:
            pts.append(x)
        total = 0.0
        for s, e in zip(pts[:-1], pts[1:]):
            total += self._span_integral(k, q, float(s), float(e))
        return total

    def _span_integral(self, k, q, s, e):
        key = (k, q, s, e)
        cache = self._spans
        if key not in cache:
            val, _ = quad(lambda y: self.N(k, q, y), s, e, epsabs=QUAD_EPSABS,
                          epsrel=QUAD_EPSREL, limit=200)
            cache[key] = val
        return cache[key]

    def _d(self, j: int, q: int) -> float:
        lo, hi = self._support(j, q)
        if hi <= lo:
            return 0.0
        return self.F(j, q, hi)

    def __call__(self, x: float) -> np.ndarray:
        n = self.xi.size - self.p - 1
        return np.array([self.N(k, self.p, float(x)) for k in range(n)])


def recurrence_oracle(space: RootVector, knots: KnotVector, x: float) -> np.ndarray:
    """All ``n`` TB-spline values at ``x`` by the integral recurrence."""
    return RecurrenceOracle(space, knots)(x)
