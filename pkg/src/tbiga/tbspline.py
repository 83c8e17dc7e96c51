"""Tchebycheffian B-spline spaces built by extraction from local Bernstein bases.

Each TB-spline is the unique (up to scale) spline supported on its local knot
span ``[xi_k, xi_{k+p+1}]``.  It is computed as the one-dimensional null space of
the smoothness conditions, written on the Bernstein coefficients of the elements
in that span.  The scales then follow from the partition of unity.  No weight
systems are needed, and the result is the usual Bezier extraction in the
polynomial case.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .bernstein import LocalBasis, build_bernstein
from .ect import LocalGenerators, RootVector, critical_length_lower_bound
from .errors import ConstraintRankDeficiency, MonomialAbsent

log = logging.getLogger(__name__)

# Below this singular-value gap the null vector is recomputed in extended precision.
MP_GAP_TOL = 1e-4
MP_MIN_DPS = 32
MP_MAX_DPS = 512
MP_AGREE_TOL = 1e-14
POU_TOL = 1e-9
NONNEG_TOL = -1e-9
SMOOTH_TOL = 1e-7


@dataclass(frozen=True)
class Partition:
    breakpoints: np.ndarray
    smoothness: tuple[int, ...]

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float)
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "smoothness", tuple(int(r) for r in self.smoothness))
        if x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing with at least two entries")
        if len(self.smoothness) != x.size - 2:
            raise ValueError(f"expected {x.size - 2} smoothness values, got {len(self.smoothness)}")

    @property
    def m(self) -> int:
        return self.breakpoints.size - 1

    @classmethod
    def uniform(cls, m: int, degree: int, smoothness: int | None = None,
                a: float = 0.0, b: float = 1.0) -> "Partition":
        """``m`` equal elements on ``[a, b]``; maximal smoothness by default."""
        r = degree - 1 if smoothness is None else smoothness
        x = a + (b - a) * np.arange(m + 1) / m
        return cls(x, (r,) * (m - 1))


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    degree: int

    @property
    def n(self) -> int:
        return self.knots.size - self.degree - 1


def knots_from_partition(partition: Partition, p: int) -> KnotVector:
    for r in partition.smoothness:
        if not -1 <= r <= p - 1:
            raise ValueError(f"smoothness {r} outside [-1, {p - 1}]")
    x = partition.breakpoints
    knots = [x[0]] * (p + 1)
    for xi, r in zip(x[1:-1], partition.smoothness):
        knots += [xi] * (p - r)
    knots += [x[-1]] * (p + 1)
    return KnotVector(np.array(knots), p)


def dimension(m: int, p: int, smoothness) -> int:
    return p + 1 + sum(p - r for r in smoothness)


@dataclass
class FeasibilityReport:
    bound: float
    criterion: str
    windows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(w[3] for w in self.windows)

    def __str__(self):
        lines = [f"criterion: {self.criterion}, bound {self.bound:.6g}"]
        for k, length, bound, ok in self.windows:
            lines.append(f"  window {k}: length {length:.6g} {'<' if ok else '>='} {bound:.6g}"
                         f"  {'pass' if ok else 'FAIL'}")
        lines.append("feasible" if self.passed else "infeasible")
        return "\n".join(lines)


def check_knot_feasibility(space: RootVector, knots: KnotVector) -> FeasibilityReport:
    """Check the sufficient knot-spacing conditions for a TB-spline basis to exist.

    Real roots only: always feasible.  Cycloidal spaces: element lengths below
    ``pi / beta``.  Otherwise every window ``xi_{k+p} - xi_{k+1}`` (1-based) must
    be shorter than the critical-length bound of the space.
    """
    p = space.degree
    xi = knots.knots
    bound = critical_length_lower_bound(space)
    if space.all_real:
        return FeasibilityReport(math.inf, "real roots: no restriction")
    if space.is_cycloidal():
        rep = FeasibilityReport(bound, "cycloidal: element length < pi/beta")
        bps = np.unique(xi)
        for i, length in enumerate(np.diff(bps)):
            rep.windows.append((i + 1, float(length), bound, bool(length < bound)))
        return rep
    crit = "harmonic: window < pi/beta" if space.harmonic_base() else "window < pi/max(beta)"
    rep = FeasibilityReport(bound, crit)
    n = knots.n
    for k in range(n):
        lo, hi = xi[k + 1], xi[min(k + p, xi.size - 1)]
        if hi > lo:
            length = float(hi - lo)
            rep.windows.append((k + 1, length, bound, bool(length < bound)))
    return rep


@dataclass(eq=False)
class TBSplineSpace:
    space: RootVector
    partition: Partition
    knots: KnotVector
    local_bases: list[LocalBasis]
    extraction: np.ndarray      # (m, p+1, p+1): Bernstein j x active spline
    offsets: np.ndarray         # first active global index per element
    validity: str = "valid"
    diagnostics: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return self.space.degree

    @property
    def n(self) -> int:
        return self.knots.n

    @property
    def m(self) -> int:
        return self.partition.m

    @property
    def breakpoints(self) -> np.ndarray:
        return self.partition.breakpoints

    @property
    def active_index(self) -> np.ndarray:
        """First global index of the functions active on each element."""
        return self.offsets

    def element_of(self, x) -> np.ndarray:
        """Element index, right-continuous at breakpoints and closed at the right end."""
        x = np.asarray(x, dtype=float)
        e = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(e, 0, self.m - 1)

    def eval(self, x, derivative_order: int = 0):
        """Active offsets and ``(N, p+1)`` values of the TB-splines at points ``x``."""
        offs, vals = self.eval_orders(x, derivative_order)
        return offs, vals[derivative_order]

    def eval_orders(self, x, max_order: int):
        """Offsets and values for all derivative orders, shape ``(max_order+1, N, p+1)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e = self.element_of(x)
        p = self.degree
        out = np.zeros((max_order + 1, x.size, p + 1))
        for key, elems in self._groups().items():
            mask = np.isin(e, elems)
            if not mask.any():
                continue
            ee = e[mask]
            basis = self.local_bases[elems[0]]
            u = (x[mask] - self.breakpoints[ee]) / basis.h
            bern = basis.eval_u_orders(u, max_order)           # (r, N, p+1)
            scale = basis.h ** -np.arange(max_order + 1)
            H = self.extraction[ee]                           # (N, p+1, p+1)
            out[:, mask, :] = np.einsum("rnj,njk->rnk", bern, H) * scale[:, None, None]
        return self.offsets[e], out

    def eval_element_grid(self, u, max_order: int) -> np.ndarray:
        """Values on the same local points ``u`` in every element: ``(r, m, len(u), p+1)``."""
        u = np.asarray(u, dtype=float)
        out = np.zeros((max_order + 1, self.m, u.size, self.degree + 1))
        for key, elems in self._groups().items():
            basis = self.local_bases[elems[0]]
            bern = basis.eval_u_orders(u, max_order)
            scale = basis.h ** -np.arange(max_order + 1)
            vals = np.einsum("rqj,ejk->reqk", bern, self.extraction[elems])
            out[:, elems] = vals * scale[:, None, None, None]
        return out

    def collocation(self, x, derivative_order: int = 0) -> np.ndarray:
        """Dense matrix ``M[i, k] = D^r N_k(x_i)``."""
        offs, vals = self.eval(x, derivative_order)
        M = np.zeros((offs.size, self.n))
        rows = np.arange(offs.size)[:, None]
        M[rows, offs[:, None] + np.arange(self.degree + 1)] = vals
        return M

    def _groups(self):
        groups = {}
        for e, basis in enumerate(self.local_bases):
            groups.setdefault(id(basis.coeff_matrix), []).append(e)
        return {k: np.array(v) for k, v in groups.items()}


def _element_offsets(knots: KnotVector, breakpoints: np.ndarray) -> np.ndarray:
    xi = knots.knots
    p = knots.degree
    # last knot index equal to the element's left breakpoint
    last = np.searchsorted(xi, breakpoints[:-1], side="right") - 1
    return last - p


def _local_bases(space: RootVector, x: np.ndarray) -> list[LocalBasis]:
    cache = {}
    out = []
    for a, b in zip(x[:-1], x[1:]):
        key = float(f"{b - a:.13e}")
        if key not in cache:
            gens = LocalGenerators(space, b - a)
            cache[key] = build_bernstein(space, 0.0, b - a, gens)
        ref = cache[key]
        out.append(LocalBasis(space, (float(a), float(b)), ref.coeff_matrix, ref.gens,
                              ref.validity, ref.diagnostics))
    return out


def _breakpoint_operators(space: RootVector, href: float, r: int):
    """Operators ``prod (1 - D/w) (href D)^s`` of exact order ``l = 0..r``, in x-units.

    Roots with ``|alpha| href >= 1`` are used as factors (conjugate pairs kept
    together), so the dominant exponentials drop out of the continuity rows.
    """
    factors = []
    for root in space.roots:
        if abs(root.alpha) * href >= 1.0:
            for _ in range(root.multiplicity):
                factors.append((root.omega,) if root.beta == 0
                               else (root.omega, root.omega.conjugate()))
    ops = []
    for l in range(r + 1):
        used, deg = [], 0
        for f in factors:
            if deg + len(f) > l:
                break
            used.extend(f)
            deg += len(f)
        ops.append((used, l - deg))
    return ops


class _Link:
    """Continuity conditions ``Tl c_left = Tr c_right`` at one breakpoint.

    ``c_left[i]`` is Bernstein coefficient ``p - i`` of the left element and
    ``c_right[i]`` coefficient ``i`` of the right one, ``i = 0..r``; both
    matrices are lower triangular.  The extended-precision copy is built on
    demand for ill-conditioned constraint systems.
    """

    def __init__(self, left: LocalBasis | None, right: LocalBasis | None, space, r: int):
        self.r = r
        self._bases = (left, right)
        self._space = space
        self._mp = {}
        if r < 0:
            self.tl = self.tr = np.zeros((0, 0))
            return
        ops, sl, sr = self._ops()
        _, Fb = left.end_functionals(ops[0])
        Fa, _ = right.end_functionals(ops[1])
        self.tl = np.tril(Fb[:, ::-1][:, : r + 1] * sl[:, None])
        self.tr = np.tril(Fa[:, : r + 1] * sr[:, None])

    def _ops(self):
        bl, br = self._bases
        href = min(bl.h, br.h)
        ops = _breakpoint_operators(self._space, href, self.r)
        sl = np.array([(href / bl.h) ** s for _, s in ops])
        sr = np.array([(href / br.h) ** s for _, s in ops])
        return ([([w * bl.h for w in f], s) for f, s in ops],
                [([w * br.h for w in f], s) for f, s in ops]), sl, sr

    def mp(self, dps: int):
        if dps not in self._mp:
            bl, br = self._bases
            r = self.r
            with mpmath.workdps(dps):
                ops, sl, sr = self._ops()
                _, Fb = bl.end_functionals_mp(ops[0])
                Fa, _ = br.end_functionals_mp(ops[1])
                p = bl.degree
                tl = [[Fb[l, p - i] * mpmath.mpf(sl[l]) if i <= l else mpmath.mpf(0)
                       for i in range(r + 1)] for l in range(r + 1)]
                tr = [[Fa[l, i] * mpmath.mpf(sr[l]) if i <= l else mpmath.mpf(0)
                       for i in range(r + 1)] for l in range(r + 1)]
            self._mp[dps] = (tl, tr)
        return self._mp[dps]


def _continuity_links(space: RootVector, bases: list[LocalBasis], smoothness):
    """One :class:`_Link` per interior breakpoint, shared between equal configurations."""
    links = []
    cache = {}
    for e, r in enumerate(smoothness):
        bl, br = bases[e], bases[e + 1]
        key = (id(bl.coeff_matrix), id(br.coeff_matrix), r)
        if key not in cache:
            cache[key] = _Link(bl, br, space, r) if r >= 0 else _Link(None, None, space, r)
        links.append(cache[key])
    return links


def _constraint_rows(free, idx, U, p, pieces, zero, normalize):
    """Rows of the continuity system; ``pieces[t] = (Tl, Tr)`` between elements t, t+1."""
    rows = []
    for t, (left, right) in enumerate(pieces):
        for l in range(len(left)):
            row = [zero] * U
            for i in range(l + 1):
                if free[t, p - i]:
                    row[idx[t, p - i]] += left[l][i]
                if free[t + 1, i]:
                    row[idx[t + 1, i]] -= right[l][i]
            row = normalize(row)
            if row is not None:
                rows.append(row)
    return rows


def _normalize_np(row):
    row = np.asarray(row, dtype=float)
    nrm = np.abs(row).max()
    return row / nrm if nrm > 0 else None


def _normalize_mp(row):
    nrm = max(abs(v) for v in row)
    return [v / nrm for v in row] if nrm > 0 else None


def _null_vector_mp(free, idx, U, p, links, dps):
    """Null vector of the constraint system via a full QR in ``dps`` digits."""
    with mpmath.workdps(dps):
        pieces = [lk.mp(dps) for lk in links]
        rows = _constraint_rows(free, idx, U, p, pieces, mpmath.mpf(0), _normalize_mp)
        if len(rows) < U - 1:
            return None, 0.0
        A = mpmath.matrix(rows)
        Q, R = mpmath.qr(A.T, mode="full")
        diag = [abs(R[i, i]) for i in range(min(R.rows, R.cols))]
        gap = min(diag) / max(diag)
        v = np.array([float(Q[i, Q.cols - 1]) for i in range(U)])
        return v, float(gap)


def _minimal_support_function(k, xi, p, elem_lo, elem_hi, links, cache=None):
    """Bernstein coefficients (E, p+1) of the TB-spline with local knots ``xi[k:k+p+2]``.

    The coefficients span the 1-D null space of the continuity rows on the
    support.  When the double-precision singular-value gap cannot deliver about
    twelve correct digits (functions that are nearly supported on fewer
    elements, as with steep exponentials), the null vector is recomputed in
    extended precision and confirmed at a second precision.
    """
    lo, hi = xi[k], xi[k + p + 1]
    local = xi[k: k + p + 2]
    mu_l = int(np.sum(local == lo))
    mu_r = int(np.sum(local == hi))
    elems = list(range(elem_lo, elem_hi + 1))
    E = len(elems)
    free = np.ones((E, p + 1), dtype=bool)
    free[0, : p + 1 - mu_l] = False          # vanish to order p+1-mu_l at the left end
    free[-1, mu_r:] = False                   # vanish to order p+1-mu_r at the right end
    idx = -np.ones((E, p + 1), dtype=int)
    idx[free] = np.arange(free.sum())
    U = int(free.sum())
    seg = [links[e] for e in elems[:-1]]
    key = (tuple(id(lk) for lk in seg), free.tobytes(), free.shape)
    if cache is not None and key in cache:
        v = cache[key]
    else:
        rows = _constraint_rows(free, idx, U, p, [(lk.tl, lk.tr) for lk in seg], 0.0, _normalize_np)
        if rows:
            _, s, vt = np.linalg.svd(np.array(rows), full_matrices=True)
            gap = s[U - 2] / s[0] if s.size >= U - 1 else 0.0
            v = vt[-1]
            if gap < MP_GAP_TOL:
                v = _refine_null_vector(k, free, idx, U, p, seg, gap)
        else:
            if U != 1:
                raise ConstraintRankDeficiency(f"TB-spline {k}: {U} free coefficients, no constraints")
            v = np.ones(1)
        if cache is not None:
            cache[key] = v
    coeffs = np.zeros((E, p + 1))
    coeffs[free] = v
    if coeffs.flat[np.argmax(np.abs(coeffs))] < 0:
        coeffs = -coeffs
    return coeffs


def _refine_null_vector(k, free, idx, U, p, seg, gap):
    digits = 16 + max(0, int(math.ceil(-math.log10(max(gap, 1e-300)))))
    dps = max(MP_MIN_DPS, digits + 16)
    prev = None
    while dps <= MP_MAX_DPS:
        v, mgap = _null_vector_mp(free, idx, U, p, seg, dps)
        if v is None:
            break
        if mgap <= 10.0 ** (8 - dps):
            prev = None                       # still degenerate at this precision
        else:
            v = v if v[np.argmax(np.abs(v))] > 0 else -v
            if prev is not None and np.max(np.abs(v - prev)) <= MP_AGREE_TOL * np.abs(v).max():
                return v
            prev = v
        dps *= 2
    raise ConstraintRankDeficiency(
        f"smoothness constraints for TB-spline {k} leave more than one free direction")


def build_tbspline_space(space: RootVector, partition: Partition, p: int | None = None,
                         check: bool = True) -> TBSplineSpace:
    """Construct the TB-spline basis of the spline space with pieces in ``space``.

    With ``check=True`` the knot-spacing criterion is tested first and a warning
    is logged when it fails; the basis is built regardless and flagged by
    :func:`validate_basis`.
    """
    if p is None:
        p = space.degree
    if p != space.degree:
        raise ValueError(f"degree {p} does not match the space degree {space.degree}")
    knots = knots_from_partition(partition, p)
    if check:
        rep = check_knot_feasibility(space, knots)
        if not rep.passed:
            log.warning("knot spacing outside the guaranteed range for %s:\n%s",
                        space.describe(), rep)
    x = partition.breakpoints
    m = partition.m
    h = np.diff(x)
    bases = _local_bases(space, x)
    xi = knots.knots
    n = knots.n
    offsets = _element_offsets(knots, x)
    links = _continuity_links(space, bases, partition.smoothness)
    G = np.zeros((m, p + 1, p + 1))
    null_cache = {}
    for k in range(n):
        lo, hi = xi[k], xi[k + p + 1]
        e_lo = int(np.searchsorted(x, lo, side="right") - 1)
        e_hi = int(np.searchsorted(x, hi, side="left") - 1)
        coeffs = _minimal_support_function(k, xi, p, e_lo, e_hi, links, null_cache)
        for t, e in enumerate(range(e_lo, e_hi + 1)):
            G[e, :, k - offsets[e]] = coeffs[t]
    scales = _partition_of_unity_scales(G, offsets, n)
    H = np.empty_like(G)
    for e in range(m):
        H[e] = G[e] * scales[offsets[e]: offsets[e] + p + 1][None, :]
    ts = TBSplineSpace(space, partition, knots, bases, H, offsets)
    flag, diag = validate_basis(ts)
    ts.validity = flag
    ts.diagnostics = diag
    if flag != "valid":
        log.warning("TB-spline basis for %s is suspect: %s", space.describe(), diag)
    return ts


def _partition_of_unity_scales(G, offsets, n):
    m, q, _ = G.shape
    scales = np.zeros(n)
    weight = np.full(n, -1.0)
    for e in range(m):
        s = np.linalg.solve(G[e], np.ones(q))
        mag = np.abs(G[e]).max(axis=0)
        for t in range(q):
            k = offsets[e] + t
            if mag[t] > weight[k]:
                weight[k] = mag[t]
                scales[k] = s[t]
    return scales


def eval_tbsplines(ts: TBSplineSpace, x: float, derivative_order: int = 0):
    """Offset of the active window and the ``p+1`` values of ``D^r N_k`` at a scalar ``x``."""
    offs, vals = ts.eval(np.array([x]), derivative_order)
    return int(offs[0]), vals[0]


def validate_basis(ts: TBSplineSpace, samples_per_element: int = 100):
    """Numerically test the TB-spline properties; returns ``(flag, diagnostics)``."""
    p = ts.degree
    u = np.linspace(0.0, 1.0, samples_per_element)
    vals = ts.eval_element_grid(u, 0)[0]                    # (m, q, p+1)
    pou = float(np.max(np.abs(vals.sum(axis=-1) - 1.0)))
    min_val = float(vals.min())
    min_coeff = float(ts.extraction.min())
    row_sum = float(np.max(np.abs(ts.extraction.sum(axis=2) - 1.0)))
    _, v0 = eval_tbsplines(ts, ts.breakpoints[0])
    _, v1 = eval_tbsplines(ts, ts.breakpoints[-1])
    e0 = np.zeros(p + 1)
    e0[0] = 1.0
    e1 = np.zeros(p + 1)
    e1[-1] = 1.0
    endpoint = float(max(np.abs(v0 - e0).max(), np.abs(v1 - e1).max()))
    smooth = _smoothness_jumps(ts)
    local_ok = all(b.validity == "valid" for b in ts.local_bases)
    diag = {
        "partition_of_unity": pou,
        "min_value": min_val,
        "min_extraction": min_coeff,
        "extraction_row_sum": row_sum,
        "endpoint_interpolation": endpoint,
        "smoothness_jump": smooth,
        "local_support": 0.0,   # structural: values outside the span are never formed
        "local_bases_valid": local_ok,
    }
    ok = (pou <= POU_TOL and min_val >= NONNEG_TOL and min_coeff >= NONNEG_TOL
          and endpoint <= POU_TOL and smooth <= SMOOTH_TOL)
    return ("valid" if ok else "suspect"), diag


def _smoothness_jumps(ts: TBSplineSpace) -> float:
    """Worst relative jump of the continuity functionals across interior breakpoints.

    The functionals are the triangular combinations of derivatives ``0..r_i``
    used in the construction; each jump is measured against the magnitude of
    the terms that form it.
    """
    p = ts.degree
    worst = 0.0
    for i, r in enumerate(ts.partition.smoothness, start=1):
        if r < 0:
            continue
        bl, br = ts.local_bases[i - 1], ts.local_bases[i]
        href = min(bl.h, br.h)
        ops = _breakpoint_operators(ts.space, href, r)
        _, Fb = bl.end_functionals([([w * bl.h for w in f], s) for f, s in ops])
        Fa, _ = br.end_functionals([([w * br.h for w in f], s) for f, s in ops])
        sl = np.array([(href / bl.h) ** s for _, s in ops])[:, None]
        sr = np.array([(href / br.h) ** s for _, s in ops])[:, None]
        Hl, Hr = ts.extraction[i - 1], ts.extraction[i]
        left = np.zeros((r + 1, ts.n))
        right = np.zeros((r + 1, ts.n))
        mag = np.zeros((r + 1, ts.n))
        ol, orr = ts.offsets[i - 1], ts.offsets[i]
        left[:, ol: ol + p + 1] = sl * (Fb @ Hl)
        right[:, orr: orr + p + 1] = sr * (Fa @ Hr)
        mag[:, ol: ol + p + 1] += sl * (np.abs(Fb) @ np.abs(Hl))
        mag[:, orr: orr + p + 1] += sr * (np.abs(Fa) @ np.abs(Hr))
        scale = np.maximum(mag.max(axis=1, keepdims=True), 1e-300)
        worst = max(worst, float(np.max(np.abs(left - right) / scale)))
    return worst


def greville_abscissae(ts: TBSplineSpace) -> np.ndarray:
    """Coefficients ``eta`` with ``x = sum_k eta_k N_k(x)`` (least squares over all elements)."""
    if not ts.space.contains_identity:
        raise MonomialAbsent("Greville abscissae need x in the ECT-space")
    p = ts.degree
    rows = np.zeros((ts.m * (p + 1), ts.n))
    rhs = np.zeros(ts.m * (p + 1))
    for e, basis in enumerate(ts.local_bases):
        beta = basis.to_bernstein(basis.gens.identity_coefficients(basis.a))
        sl = slice(e * (p + 1), (e + 1) * (p + 1))
        rows[sl, ts.offsets[e]: ts.offsets[e] + p + 1] = ts.extraction[e]
        rhs[sl] = beta
    eta, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    return eta


def sample_grid(ts: TBSplineSpace, samples_per_element: int = 20) -> np.ndarray:
    """Uniform samples in every element, breakpoints included once."""
    x = ts.breakpoints
    u = np.linspace(0.0, 1.0, samples_per_element + 1)[:-1]
    return np.concatenate([(x[:-1, None] + np.diff(x)[:, None] * u).ravel(), x[-1:]])


def write_basis_csv(ts: TBSplineSpace, path, samples_per_element: int = 20,
                    derivative_order: int = 0) -> None:
    """CSV with columns ``x, N_0, ..., N_{n-1}`` (``B_j`` when there is a single element)."""
    x = sample_grid(ts, samples_per_element)
    M = ts.collocation(x, derivative_order)
    name = "B" if ts.m == 1 else "N"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"] + [f"{name}_{k}" for k in range(ts.n)])
        for xi, row in zip(x, M):
            w.writerow([repr(float(xi))] + [repr(float(v)) for v in row])


def format_diagnostics(ts: TBSplineSpace) -> str:
    """Plain-text report of the stored validation results."""
    lines = [f"space      {ts.space.describe()}",
             f"elements   {ts.m}   functions {ts.n}   degree {ts.degree}",
             f"validity   {ts.validity}"]
    for key, val in ts.diagnostics.items():
        lines.append(f"  {key:24s} {val:.3e}" if isinstance(val, float) else f"  {key:24s} {val}")
    return "\n".join(lines)
