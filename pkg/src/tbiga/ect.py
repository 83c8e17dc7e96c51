"""ECT-spaces spanned by null-spaces of constant-coefficient differential operators.

A space is described by its degree ``p`` and the nonzero characteristic roots
``alpha + i*beta`` with multiplicities.  The zero root fills the remaining
dimension, so constants (and low-order monomials) are always present.

Two evaluators are provided:

* :func:`eval_generators` evaluates the closed-form generators
  ``x^k e^{alpha x} {1, cos(beta x), sin(beta x)}`` with analytic derivatives.
* :class:`LocalGenerators` is a conditioned basis of the same space on one
  element, in the local coordinate ``u = (x - a) / h``.  Small roots (relative
  to ``1/h``) are handled through divided differences of ``z -> exp(z u)``,
  computed with a matrix exponential; these behave like ``u^k / k!`` and stay
  well conditioned on short elements.  Roots with ``|alpha| h >= 1`` use the
  closed form, anchored at the element end where the exponential is largest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import mpmath
from scipy.linalg import expm

from .errors import DimensionOverflow, DuplicateRoot

# Roots with |alpha| * h at or above this value use closed-form exponentials.
LARGE_ROOT_THRESHOLD = 1.0


@dataclass(frozen=True)
class Root:
    alpha: float
    beta: float = 0.0
    multiplicity: int = 1

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0 (conjugates are implicit), got {self.beta}")
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 1:
            raise ValueError(f"multiplicity must be a positive integer, got {self.multiplicity}")

    @property
    def dim(self) -> int:
        return self.multiplicity * (1 if self.beta == 0 else 2)

    @property
    def omega(self) -> complex:
        return complex(self.alpha, self.beta)


@dataclass(frozen=True)
class RootVector:
    """Nonzero characteristic roots plus degree; the zero root is implicit."""

    roots: tuple[Root, ...]
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        seen = set()
        for r in self.roots:
            if r.alpha == 0 and r.beta == 0:
                raise DuplicateRoot("the zero root is implicit and cannot be listed")
            key = (float(r.alpha), float(r.beta))
            if key in seen:
                raise DuplicateRoot(f"root {r.omega} listed twice")
            seen.add(key)
        # mu0 == 0 is allowed here so derivative spaces can be represented
        if self.nonzero_dim > self.degree + 1:
            raise DimensionOverflow(
                f"roots need {self.nonzero_dim} dimensions, space of degree {self.degree} "
                f"has {self.degree + 1}")

    @property
    def dim(self) -> int:
        return self.degree + 1

    @property
    def nonzero_dim(self) -> int:
        return sum(r.dim for r in self.roots)

    @property
    def mu0(self) -> int:
        """Multiplicity of the zero root (number of monomials 1, x, ...)."""
        return self.degree + 1 - self.nonzero_dim

    @property
    def is_polynomial(self) -> bool:
        return not self.roots

    @property
    def all_real(self) -> bool:
        return all(r.beta == 0 for r in self.roots)

    @property
    def has_exponentials(self) -> bool:
        return any(r.alpha != 0 for r in self.roots)

    @property
    def contains_identity(self) -> bool:
        return self.mu0 >= 2

    @property
    def max_beta(self) -> float:
        return max((r.beta for r in self.roots), default=0.0)

    def nodes(self) -> list[complex]:
        """All characteristic roots with multiplicity; conjugate pairs interleaved."""
        out = [0j] * self.mu0
        for r in self.roots:
            for _ in range(r.multiplicity):
                if r.beta == 0:
                    out.append(complex(r.alpha, 0.0))
                else:
                    out.extend([r.omega, r.omega.conjugate()])
        return out

    def derivative_space(self) -> "RootVector":
        """Space spanned by the derivatives; drops one zero root."""
        if self.mu0 < 1:
            raise ValueError("space without constants: derivative space is not of this family")
        return RootVector(self.roots, self.degree - 1)

    def is_cycloidal(self) -> bool:
        """Polynomials of degree p-2 plus a single trigonometric pair."""
        return (len(self.roots) == 1 and self.roots[0].alpha == 0
                and self.roots[0].beta > 0 and self.roots[0].multiplicity == 1)

    def harmonic_base(self) -> float | None:
        """Return beta if the space is {1, cos(k beta x), sin(k beta x)}_{k<=q}, else None."""
        if self.mu0 != 1 or not self.roots:
            return None
        if any(r.alpha != 0 or r.beta == 0 or r.multiplicity != 1 for r in self.roots):
            return None
        betas = sorted(r.beta for r in self.roots)
        base = betas[0]
        for k, b in enumerate(betas, start=1):
            if not math.isclose(b, k * base, rel_tol=1e-12):
                return None
        return base

    def describe(self) -> str:
        if not self.roots:
            return f"P{self.degree}"
        parts = []
        for r in self.roots:
            s = f"{r.alpha:g}" if r.beta == 0 else f"{r.alpha:g}+-{r.beta:g}i"
            parts.append(s if r.multiplicity == 1 else f"{s}^{r.multiplicity}")
        return f"P{self.degree}({','.join(parts)})"


def make_space(roots: Sequence = (), degree: int = 0) -> RootVector:
    """Build a validated space from ``(alpha, beta, multiplicity)`` tuples.

    Entries may also be :class:`Root` instances or ``(alpha, beta)`` pairs.
    Constants must belong to the space, so the roots may use at most
    ``degree`` dimensions.
    """
    parsed = []
    for r in roots:
        if isinstance(r, Root):
            parsed.append(r)
        else:
            r = tuple(r)
            parsed.append(Root(float(r[0]), float(r[1]) if len(r) > 1 else 0.0,
                               int(r[2]) if len(r) > 2 else 1))
    space = RootVector(tuple(parsed), int(degree))
    if space.mu0 < 1:
        raise DimensionOverflow(
            f"roots need {space.nonzero_dim} dimensions but only {degree} are available "
            f"besides constants")
    return space


@dataclass(frozen=True)
class Generator:
    """``x^power e^{alpha x}`` times ``cos(beta x)`` (part='re') or ``sin(beta x)`` (part='im')."""

    power: int
    alpha: float = 0.0
    beta: float = 0.0
    part: str = "re"

    def __str__(self):
        terms = []
        if self.power:
            terms.append("x" if self.power == 1 else f"x^{self.power}")
        if self.alpha:
            terms.append(f"exp({self.alpha:g}x)")
        if self.beta:
            terms.append(f"{'cos' if self.part == 're' else 'sin'}({self.beta:g}x)")
        return "*".join(terms) or "1"


def generators(space: RootVector) -> list[Generator]:
    """Closed-form generators, polynomials first, then one block per root in input order."""
    gens = [Generator(k) for k in range(space.mu0)]
    for r in space.roots:
        for k in range(r.multiplicity):
            if r.beta == 0:
                gens.append(Generator(k, r.alpha))
            else:
                gens.append(Generator(k, r.alpha, r.beta, "re"))
                gens.append(Generator(k, r.alpha, r.beta, "im"))
    return gens


def _closed_form(t, power: int, z: complex, shift, order: int):
    """``D^order`` of ``t^power * exp(z t + shift)``, complex valued."""
    t = np.asarray(t, dtype=float)
    ez = np.exp(z * t + shift)
    acc = np.zeros(np.broadcast(t, ez).shape, dtype=complex)
    for i in range(min(order, power) + 1):
        coef = math.comb(order, i) * math.perm(power, i)
        acc = acc + coef * t ** (power - i) * z ** (order - i)
    return acc * ez


def eval_generators(space: RootVector, x, derivative_order: int = 0, anchor: float = 0.0,
                    element: tuple[float, float] | None = None) -> np.ndarray:
    """Evaluate ``D^r g_j`` for all closed-form generators.

    Generators are re-anchored as ``g_j(x - anchor)``.  When ``element=(a, b)``
    is given, exponential factors are written as ``e^{alpha (x - c)}`` with ``c``
    the element end where the exponential peaks, so their range there is (0, 1].
    Returns an array of shape ``x.shape + (p+1,)``.
    """
    x = np.asarray(x, dtype=float)
    t = x - anchor
    out = []
    for g in generators(space):
        if element is not None and g.alpha != 0:
            c = element[1] if g.alpha > 0 else element[0]
            shift = g.alpha * (anchor - c)
        else:
            shift = 0.0
        val = _closed_form(t, g.power, complex(g.alpha, g.beta), shift, derivative_order)
        out.append(val.real if g.part == "re" else val.imag)
    return np.stack(out, axis=-1)


def critical_length_lower_bound(space: RootVector) -> float:
    """Interval length below which the space is guaranteed to be an ECT-space.

    ``inf`` for real roots only; ``pi / max(beta)`` in general, improved to
    ``pi / beta`` for harmonic spaces with base phase ``beta``.
    """
    if space.all_real:
        return math.inf
    base = space.harmonic_base()
    if base is not None:
        return math.pi / base
    return math.pi / space.max_beta


class LocalGenerators:
    """Conditioned basis of the space on an element of length ``h``, in ``u`` in [0, 1]."""

    def __init__(self, space: RootVector, h: float):
        if h <= 0:
            raise ValueError("element length must be positive")
        self.space = space
        self.h = float(h)
        nodes = [0j] * space.mu0
        self._large = []
        for r in space.roots:
            if abs(r.alpha) * h >= LARGE_ROOT_THRESHOLD:
                self._large.append(r)
                continue
            for _ in range(r.multiplicity):
                w = r.omega * h
                nodes.extend([w] if r.beta == 0 else [w, w.conjugate()])
        self.nodes = np.array(nodes, dtype=complex)
        nd = len(nodes)
        self._complex = bool(np.any(self.nodes.imag != 0))
        L = np.diag(self.nodes) + np.diag(np.ones(max(nd - 1, 0)), -1)
        self._L = L if self._complex else L.real
        self.dim = space.dim

    def __call__(self, u, order: int = 0) -> np.ndarray:
        """``D_u^order`` of all local generators; shape ``u.shape + (p+1,)``."""
        return self.eval_orders(u, order)[order]

    def eval_orders(self, u, max_order: int) -> np.ndarray:
        """All derivative orders ``0..max_order``; shape ``(max_order+1,) + u.shape + (p+1,)``."""
        u = np.asarray(u, dtype=float)
        flat = u.reshape(-1)
        out = np.empty((max_order + 1, flat.size, self.dim))
        nd = len(self.nodes)
        if nd:
            L = self._L
            cols = np.empty((flat.size, nd), dtype=L.dtype)
            for i, ui in enumerate(flat):
                cols[i] = expm(ui * L)[:, 0]
            cur = cols
            for l in range(max_order + 1):
                out[l, :, :nd] = cur.real
                cur = cur @ L.T
        col = nd
        for r in self._large:
            a = r.alpha * self.h
            b = r.beta * self.h
            c = 1.0 if a > 0 else 0.0
            for k in range(r.multiplicity):
                for l in range(max_order + 1):
                    v = _closed_form(flat - c, k, complex(a, b), 0.0, l)
                    out[l, :, col] = v.real
                    if b:
                        out[l, :, col + 1] = v.imag
                col += 1 if b == 0 else 2
        return out.reshape((max_order + 1,) + u.shape + (self.dim,))

    def apply_operator(self, u: float, roots, power: int = 0) -> np.ndarray:
        """Values at ``u`` of ``prod_i (1 - D/roots[i]) D^power`` applied to every generator.

        ``roots`` are in local units.  Factors with a root of the space annihilate
        the matching exponential exactly, which avoids cancellation when such an
        exponential dominates high derivatives.  The operator must be real, so
        complex roots have to come in conjugate pairs.
        """
        out = np.empty(self.dim)
        nd = len(self.nodes)
        if nd:
            L = self._L.astype(complex)
            v = expm(u * self._L)[:, 0].astype(complex)
            for _ in range(power):
                v = L @ v
            for rho in roots:
                v = v - (L @ v) / rho
            out[:nd] = v.real
        col = nd
        for r in self._large:
            w = complex(r.alpha * self.h, r.beta * self.h)
            t = u - (1.0 if r.alpha > 0 else 0.0)
            for k in range(r.multiplicity):
                # function e^{w t} q(t) with q stored by ascending powers
                q = np.zeros(k + 1, dtype=complex)
                q[k] = 1.0
                for _ in range(power):
                    q = w * q + np.append(q[1:] * np.arange(1, q.size), 0.0)
                for rho in roots:
                    dq = np.append(q[1:] * np.arange(1, q.size), 0.0)
                    q = ((rho - w) * q - dq) / rho
                val = np.polyval(q[::-1], t) * np.exp(w * t)
                out[col] = val.real
                if r.beta:
                    out[col + 1] = val.imag
                col += 1 if r.beta == 0 else 2
        return out

    def apply_operator_mp(self, u: float, roots, power: int = 0) -> list:
        """:meth:`apply_operator` in the current mpmath precision; returns mpf values."""
        mp = mpmath.mp
        out = []
        nd = len(self.nodes)
        if nd:
            L = mp.matrix(nd, nd)
            for i, z in enumerate(self.nodes):
                L[i, i] = mp.mpc(z.real, z.imag)
                if i:
                    L[i, i - 1] = 1
            v = mp.expm(mp.mpf(u) * L)[:, 0]
            for _ in range(power):
                v = L * v
            for rho in roots:
                v = v - (L * v) / mp.mpc(rho.real, rho.imag)
            out.extend(mp.re(v[i]) for i in range(nd))
        for r in self._large:
            w = mp.mpc(mp.mpf(r.alpha) * mp.mpf(self.h), mp.mpf(r.beta) * mp.mpf(self.h))
            t = mp.mpf(u) - (1 if r.alpha > 0 else 0)
            for k in range(r.multiplicity):
                q = [mp.mpc(0)] * k + [mp.mpc(1)]
                for _ in range(power):
                    dq = [q[i + 1] * (i + 1) for i in range(len(q) - 1)] + [mp.mpc(0)]
                    q = [w * a + b for a, b in zip(q, dq)]
                for rho in roots:
                    rho = mp.mpc(rho.real, rho.imag)
                    dq = [q[i + 1] * (i + 1) for i in range(len(q) - 1)] + [mp.mpc(0)]
                    q = [((rho - w) * a - b) / rho for a, b in zip(q, dq)]
                val = mp.polyval(q[::-1], t) * mp.exp(w * t)
                out.append(mp.re(val))
                if r.beta:
                    out.append(mp.im(val))
        return out

    def identity_coefficients(self, a: float) -> np.ndarray:
        """Coefficients of ``x = a + h u`` in this basis (needs two zero roots)."""
        if self.space.mu0 < 2:
            from .errors import MonomialAbsent
            raise MonomialAbsent("x is not in the space")
        c = np.zeros(self.dim)
        c[0] = a
        c[1] = self.h
        return c
