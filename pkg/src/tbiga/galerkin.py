"""Isogeometric Galerkin discretization of steady advection-diffusion on mapped squares.

The weak form is ``int kappa grad u . grad v + (a . grad u) v = int f v`` with
Dirichlet data lifted onto the boundary functions.  The full tensor system is
assembled element by element and then condensed onto the interior unknowns.
"""
from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sps
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .errors import AssemblyNaN, DegenerateJacobian, SingularSystem
from .geometry import DET_TOL, GeometryMap, TensorSpace
from .tbspline import greville_abscissae

log = logging.getLogger(__name__)

EDGES = ("bottom", "right", "top", "left")     # also the corner precedence order
LS_SAMPLES = 200


@dataclass
class ProblemDefinition:
    """``-div(kappa grad u) + a . grad u = f`` in ``G((0,1)^2)``, ``u = g`` on the boundary.

    ``advection`` and ``source`` take physical coordinates ``(x, y)`` arrays.
    ``boundary`` is either one callable ``g(x, y)`` or a dict keyed by edge
    name (bottom ``t=0``, right ``s=1``, top ``t=1``, left ``s=0``).
    ``boundary_geometry`` locates the boundary points where ``g`` is sampled;
    it defaults to ``geometry`` and is set to the exact map when the
    discrete geometry only approximates it.
    """

    geometry: GeometryMap
    kappa: float = 1.0
    advection: Callable | None = None
    source: Callable | None = None
    boundary: Callable | dict | None = None
    exact: Callable | None = None
    boundary_geometry: GeometryMap | None = None

    def boundary_fn(self, edge: str) -> Callable | None:
        if isinstance(self.boundary, dict):
            return self.boundary.get(edge)
        return self.boundary

    def peclet(self, x, y) -> float:
        if self.advection is None:
            return 0.0
        a = np.asarray(self.advection(np.atleast_1d(x), np.atleast_1d(y)))
        return float(np.max(np.hypot(a[..., 0], a[..., 1]))) / self.kappa


@dataclass(frozen=True)
class QuadratureRule:
    points: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, points: int) -> "QuadratureRule":
        x, w = np.polynomial.legendre.leggauss(points)
        return cls(points, 0.5 * (x + 1.0), 0.5 * w)


def select_quadrature(space: TensorSpace, multiplier: int | None = None) -> QuadratureRule:
    """Gauss points per element and direction.

    ``5 p`` with exponentials, ``3 p`` with trigonometric roots only and
    ``p + 1`` for polynomials, with ``p = max(p1, p2)``; ``multiplier``
    forces ``multiplier * p``.
    """
    p = max(space.degrees)
    roots = space.s_space.space.roots + space.t_space.space.roots
    if multiplier is not None:
        return QuadratureRule.gauss(max(1, multiplier * p))
    if any(r.alpha != 0 for r in roots):
        return QuadratureRule.gauss(5 * p)
    if roots:
        return QuadratureRule.gauss(3 * p)
    return QuadratureRule.gauss(p + 1)


@dataclass
class SUPG:
    """Streamline-upwind stabilization.

    ``tau = h / (2 max(|a_x|, |a_y|))``, i.e. ``h_a / (2 |a|)`` with ``h_a``
    the element length along the flow, unless ``tau`` is given.
    ``full_residual`` keeps the diffusion term of the strong residual.
    """

    full_residual: bool = True
    tau: float | None = None


@dataclass
class AssembledSystem:
    matrix: sps.csr_matrix          # interior block
    rhs: np.ndarray                 # interior right-hand side after lifting
    lift: np.ndarray                # full coefficient vector of the Dirichlet lift
    interior: np.ndarray            # flattened tensor indices of the unknowns
    full_matrix: sps.csr_matrix
    full_rhs: np.ndarray
    space: TensorSpace | None = None
    quadrature: QuadratureRule | None = None
    info: dict = field(default_factory=dict)

    @property
    def dof(self) -> int:
        return self.interior.size

    def export_matrix_market(self, prefix) -> None:
        scipy.io.mmwrite(f"{prefix}_A.mtx", self.matrix)
        scipy.io.mmwrite(f"{prefix}_F.mtx", self.rhs.reshape(-1, 1))


def _local_index(space: TensorSpace):
    p1, p2 = space.degrees
    a = np.tile(np.arange(p1 + 1), p2 + 1)
    b = np.repeat(np.arange(p2 + 1), p1 + 1)
    return a, b


def assemble(problem: ProblemDefinition, space: TensorSpace, quad: QuadratureRule | None = None,
             supg: SUPG | bool | None = None, bc: str | np.ndarray = "least_squares"
             ) -> AssembledSystem:
    """Assemble the condensed Galerkin system; ``bc`` is a strategy name or a lift vector."""
    if quad is None:
        quad = select_quadrature(space)
    if supg is True:
        supg = SUPG()
    ss, tt = space.s_space, space.t_space
    p1, p2 = space.degrees
    n1, n2 = space.n1, space.n2
    order = 2 if supg else 1
    Vs = ss.eval_element_grid(quad.nodes, order)           # (r, m1, q, p1+1)
    Vt = tt.eval_element_grid(quad.nodes, order)
    hs = np.diff(ss.breakpoints)
    ht = np.diff(tt.breakpoints)
    sq = (ss.breakpoints[:-1, None] + hs[:, None] * quad.nodes).ravel()
    ws = (hs[:, None] * quad.weights)                      # (m1, q)
    la, lb = _local_index(space)
    nloc = la.size
    q = quad.points
    geom = problem.geometry
    rows, cols, vals = [], [], []
    F = np.zeros(space.n)
    for et in range(tt.m):
        tq = tt.breakpoints[et] + ht[et] * quad.nodes
        wt = ht[et] * quad.weights
        d = geom.grid_derivatives(sq, tq, order)
        m1 = ss.m
        rs = lambda a: a.reshape(m1, q, q, *a.shape[2:])
        X = rs(d["x"])
        xs, ys = rs(d["s"])[..., 0], rs(d["s"])[..., 1]
        xt, yt = rs(d["t"])[..., 0], rs(d["t"])[..., 1]
        det = xs * yt - xt * ys
        if np.any(det < DET_TOL):
            raise DegenerateJacobian(
                f"det J = {det.min():.3e} in element row {et}; the map is degenerate or inverted")
        sx, sy = yt / det, -xt / det
        tx, ty = -ys / det, xs / det
        W = (ws[:, :, None] * wt[None, None, :] * det).reshape(m1, q * q, 1)

        def tens(rs_, rt_):
            # (m1, q, q, nloc) products of s- and t-factors for all local functions
            A = Vs[rs_][:, :, None, la]                       # (m1, q, 1, nloc)
            B = Vt[rt_][et][None, None, :, lb]                # (1, 1, q, nloc)
            return (A * B).reshape(m1, q * q, nloc)
        phi = tens(0, 0)
        ps, pt = tens(1, 0), tens(0, 1)
        flat = lambda a: a.reshape(m1, q * q, 1)
        gx = flat(sx) * ps + flat(tx) * pt
        gy = flat(sy) * ps + flat(ty) * pt
        Ae = problem.kappa * (np.matmul(np.swapaxes(gx * W, 1, 2), gx)
                              + np.matmul(np.swapaxes(gy * W, 1, 2), gy))
        Xf = X.reshape(m1, q * q, 2)
        if problem.source is not None:
            f = np.broadcast_to(problem.source(Xf[..., 0], Xf[..., 1]), Xf.shape[:2])
        else:
            f = np.zeros(Xf.shape[:2])
        Fe = np.matmul(np.swapaxes(phi * W, 1, 2), f[..., None])[..., 0]
        if problem.advection is not None:
            a = np.asarray(problem.advection(Xf[..., 0], Xf[..., 1]), dtype=float)
            a = np.broadcast_to(a, Xf.shape)
            ax, ay = a[..., 0:1], a[..., 1:2]
            adv = ax * gx + ay * gy
            Ae += np.matmul(np.swapaxes(phi * W, 1, 2), adv)
            if supg:
                if supg.tau is not None:
                    tau = np.full((m1, q * q, 1), supg.tau)
                else:
                    h = max(hs.max(), ht[et])
                    amax = np.maximum(np.abs(ax), np.abs(ay))
                    tau = np.where(amax > 0, h / (2 * np.where(amax > 0, amax, 1.0)), 0.0)
                res = adv
                if supg.full_residual:
                    lap = _laplacian(d, rs, Vs, Vt, et, la, lb, gx, gy,
                                     sx, sy, tx, ty, m1, q, nloc)
                    res = adv - problem.kappa * lap
                Ae += np.matmul(np.swapaxes(adv * W * tau, 1, 2), res)
                Fe += np.matmul(np.swapaxes(adv * W * tau, 1, 2), f[..., None])[..., 0]
        glob = ((tt.offsets[et] + lb)[None, :] * n1
                + ss.offsets[:, None] + la[None, :])          # (m1, nloc)
        rows.append(np.repeat(glob, nloc, axis=1).ravel())
        cols.append(np.tile(glob, (1, nloc)).ravel())
        vals.append(Ae.ravel())
        np.add.at(F, glob.ravel(), Fe.ravel())
    A = sps.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(space.n, space.n)).tocsr()
    if not np.all(np.isfinite(A.data)) or not np.all(np.isfinite(F)):
        raise AssemblyNaN("non-finite entries in the assembled system (overflow?)")
    if isinstance(bc, str):
        lift = impose_dirichlet(problem, space, bc)
    else:
        lift = np.asarray(bc, dtype=float)
    interior = np.flatnonzero(~space.boundary_mask())
    A_II = A[interior][:, interior].tocsr()
    rhs = F[interior] - A[interior] @ lift
    return AssembledSystem(A_II, rhs, lift, interior, A, F, space, quad,
                           {"supg": bool(supg), "quad": quad.points})


def _laplacian(d, rs, Vs, Vt, et, la, lb, gx, gy, sx, sy, tx, ty, m1, q, nloc):
    """Physical Laplacian of every local function via the second-order pullback."""
    def tens(rs_, rt_):
        A = Vs[rs_][:, :, None, la]
        B = Vt[rt_][et][None, None, :, lb]
        return (A * B).reshape(m1, q * q, nloc)
    flat = lambda a: a.reshape(m1, q * q, 1)
    G2 = {k: rs(d[k]).reshape(m1, q * q, 2) for k in ("ss", "st", "tt")}
    M = {}
    for key, (a, b) in {"ss": (2, 0), "st": (1, 1), "tt": (0, 2)}.items():
        M[key] = tens(a, b) - (gx * G2[key][..., 0:1] + gy * G2[key][..., 1:2])
    Kss = flat(sx * sx + sy * sy)
    Kst = flat(sx * tx + sy * ty)
    Ktt = flat(tx * tx + ty * ty)
    return Kss * M["ss"] + 2 * Kst * M["st"] + Ktt * M["tt"]


def _edge_param(edge: str, u):
    u = np.asarray(u, dtype=float)
    one, zero = np.ones_like(u), np.zeros_like(u)
    return {"bottom": (u, zero), "top": (u, one), "left": (zero, u), "right": (one, u)}[edge]


def _edge_indices(space: TensorSpace, edge: str) -> np.ndarray:
    n1, n2 = space.n1, space.n2
    if edge in ("bottom", "top"):
        l = 0 if edge == "bottom" else n2 - 1
        return space.index(np.arange(n1), l)
    k = 0 if edge == "left" else n1 - 1
    return space.index(k, np.arange(n2))


def _edge_space(space: TensorSpace, edge: str):
    return space.s_space if edge in ("bottom", "top") else space.t_space


def _g_on_edge(problem: ProblemDefinition, edge: str, u) -> np.ndarray:
    g = problem.boundary_fn(edge)
    u = np.atleast_1d(np.asarray(u, float))
    if g is None:
        return np.zeros(u.shape)
    s, t = _edge_param(edge, u)
    X = (problem.boundary_geometry or problem.geometry)(s, t)
    return np.broadcast_to(np.asarray(g(X[..., 0], X[..., 1]), dtype=float), u.shape).copy()


def _corner_values(problem: ProblemDefinition) -> dict:
    """Value per corner from the first edge in precedence order that contains it."""
    corners = {}
    for edge in EDGES:
        for u in (0.0, 1.0):
            key = tuple(float(v) for v in _edge_param(edge, np.array(u)))
            if key not in corners:
                corners[key] = float(_g_on_edge(problem, edge, u)[0])
    return corners


def impose_dirichlet(problem: ProblemDefinition, space: TensorSpace,
                     strategy: str = "least_squares") -> np.ndarray:
    """Coefficients of the boundary functions approximating ``g`` (zeros elsewhere).

    ``least_squares`` fits each edge on 200 uniform samples with the corner
    coefficients fixed; ``schoenberg`` sets coefficients to ``g`` at the
    Greville abscissae.  Corners take the value of the first edge in
    bottom, right, top, left order.
    """
    lift = np.zeros(space.n)
    if problem.boundary is None:
        return lift
    corners = _corner_values(problem)
    for edge in EDGES:
        ts = _edge_space(space, edge)
        idx = _edge_indices(space, edge)
        c0 = corners[tuple(float(v) for v in _edge_param(edge, np.array(0.0)))]
        c1 = corners[tuple(float(v) for v in _edge_param(edge, np.array(1.0)))]
        if strategy == "schoenberg":
            eta = greville_abscissae(ts)
            coef = _g_on_edge(problem, edge, eta)
        elif strategy in ("least_squares", "ls"):
            u = np.linspace(0.0, 1.0, LS_SAMPLES)
            M = ts.collocation(u)
            rhs = _g_on_edge(problem, edge, u) - M[:, 0] * c0 - M[:, -1] * c1
            inner, *_ = np.linalg.lstsq(M[:, 1:-1], rhs, rcond=None)
            coef = np.concatenate([[c0], inner, [c1]])
        else:
            raise ValueError(f"unknown boundary strategy {strategy!r}")
        coef[0], coef[-1] = c0, c1
        lift[idx] = coef
    # corners are shared by two edges; enforce the precedence values
    for (s, t), v in corners.items():
        k = 0 if s == 0.0 else space.n1 - 1
        l = 0 if t == 0.0 else space.n2 - 1
        lift[space.index(k, l)] = v
    return lift


def solve(system: AssembledSystem) -> np.ndarray:
    """Direct sparse solve of the interior system; returns the full coefficient vector."""
    A = system.matrix
    if A.shape[0] == 0:
        return system.lift.copy()
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            c = spsolve(A.tocsc(), system.rhs)
        except (MatrixRankWarning, RuntimeError) as exc:
            raise SingularSystem(f"sparse factorization failed: {exc}") from exc
    c = np.atleast_1d(c)
    if not np.all(np.isfinite(c)):
        raise SingularSystem("non-finite solution")
    res = np.abs(A @ c - system.rhs).max()
    scale = abs(A).max() * np.abs(c).max() + np.abs(system.rhs).max()
    system.info["residual"] = float(res)
    if res > 1e-10 * scale:
        log.warning("solve residual %.3e exceeds 1e-10 x scale %.3e", res, scale)
        system.info["residual_warning"] = True
    full = system.lift.copy()
    full[system.interior] = c
    return full


@dataclass
class SampleResult:
    s: np.ndarray
    t: np.ndarray
    u: np.ndarray
    xy: np.ndarray | None
    max: float
    min: float
    error: float | None = None

    def to_csv(self, path, stride: int = 1) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "t", "x", "y", "u"])
            for i in range(0, self.s.size, stride):
                for j in range(0, self.t.size, stride):
                    x, y = (self.xy[i, j] if self.xy is not None else (np.nan, np.nan))
                    w.writerow([f"{self.s[i]:.17g}", f"{self.t[j]:.17g}", f"{x:.17g}",
                                f"{y:.17g}", f"{self.u[i, j]:.17g}"])


def coefficient_grid(space: TensorSpace, coeffs) -> np.ndarray:
    """Flattened coefficients as an ``(n1, n2)`` array indexed ``[k, l]``."""
    return np.asarray(coeffs).reshape(space.n2, space.n1).T


def sample_solution(space: TensorSpace, geometry: GeometryMap, coeffs, grid: int = 501,
                    exact: Callable | None = None, keep_xy: bool = False) -> SampleResult:
    """Evaluate ``u_h`` on a uniform ``grid x grid`` parametric grid."""
    s = np.linspace(0.0, 1.0, grid)
    t = np.linspace(0.0, 1.0, grid)
    U = space.evaluate_grid(coefficient_grid(space, coeffs), s, t)
    xy = None
    err = None
    if exact is not None or keep_xy:
        xy = geometry.grid_derivatives(s, t, 0)["x"]
    if exact is not None:
        err = float(np.max(np.abs(U - exact(xy[..., 0], xy[..., 1]))))
    return SampleResult(s, t, U, xy if keep_xy else None, float(U.max()), float(U.min()), err)
