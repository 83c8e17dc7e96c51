"""Tensor-product TB-spline spaces, geometry maps and control-net fitting."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .ect import make_space
from .errors import DegenerateJacobian, InterpolationSingular
from .tbspline import Partition, TBSplineSpace, build_tbspline_space, greville_abscissae

log = logging.getLogger(__name__)

DET_TOL = 1e-14
FIT_TOL = 1e-10
FIT_AMPLIFICATION = 1e5
LS_PER_ELEMENT = 12


@dataclass(eq=False)
class TensorSpace:
    """``phi_i(s, t) = N_k(s) M_l(t)`` with ``i = l * n1 + k`` (0-based)."""

    s_space: TBSplineSpace
    t_space: TBSplineSpace

    @property
    def n1(self) -> int:
        return self.s_space.n

    @property
    def n2(self) -> int:
        return self.t_space.n

    @property
    def n(self) -> int:
        return self.n1 * self.n2

    @property
    def degrees(self) -> tuple[int, int]:
        return self.s_space.degree, self.t_space.degree

    def index(self, k, l):
        return np.asarray(l) * self.n1 + np.asarray(k)

    def unindex(self, i):
        i = np.asarray(i)
        return i % self.n1, i // self.n1

    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over flattened indices of functions that do not vanish on the boundary."""
        k, l = self.unindex(np.arange(self.n))
        return (k == 0) | (k == self.n1 - 1) | (l == 0) | (l == self.n2 - 1)

    def evaluate_grid(self, coeffs, s, t, ds: int = 0, dt: int = 0) -> np.ndarray:
        """``sum_kl c_kl D^ds N_k(s) D^dt M_l(t)`` on the tensor grid ``s x t``.

        ``coeffs`` has shape ``(n1, n2)`` or ``(n1, n2, c)``; the result has
        shape ``(len(s), len(t))`` plus any trailing component axis.
        """
        Ms = self.s_space.collocation(s, ds)
        Mt = self.t_space.collocation(t, dt)
        C = np.asarray(coeffs, dtype=float).reshape(self.n1, self.n2, -1)
        out = np.stack([Ms @ C[:, :, c] @ Mt.T for c in range(C.shape[2])], axis=-1)
        return out.reshape((len(s), len(t)) + np.shape(coeffs)[2:])


def tensor_space(s_roots, p1, t_roots, p2, m: int) -> TensorSpace:
    """Uniform maximal-smoothness tensor space on the unit square."""
    s = build_tbspline_space(make_space(s_roots, p1), Partition.uniform(m, p1))
    t = build_tbspline_space(make_space(t_roots, p2), Partition.uniform(m, p2))
    return TensorSpace(s, t)


@dataclass(frozen=True)
class Curve:
    """Planar curve ``c0 + lin t + amp exp(i (omega t + phase))`` stored as complex numbers."""

    c0: complex = 0j
    lin: complex = 0j
    amp: complex = 0j
    omega: float = 0.0
    phase: float = 0.0

    def __call__(self, t, order: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        e = self.amp * (1j * self.omega) ** order * np.exp(1j * (self.omega * t + self.phase))
        if order == 0:
            return self.c0 + self.lin * t + e
        if order == 1:
            return self.lin + e
        return e


class GeometryMap:
    """Map from the unit square; subclasses provide values and derivatives up to order 2."""

    def derivatives(self, s, t, max_order: int = 1) -> dict:
        raise NotImplementedError

    def __call__(self, s, t) -> np.ndarray:
        return self.derivatives(s, t, 0)["x"]

    def grid_derivatives(self, s, t, max_order: int = 1) -> dict:
        """Values and derivatives on the tensor grid ``s x t``; arrays ``(len(s), len(t), 2)``."""
        S, T = np.meshgrid(np.asarray(s, float), np.asarray(t, float), indexing="ij")
        return self.derivatives(S, T, max_order)

    def jacobian(self, s, t) -> "JacobianSample":
        d = self.derivatives(np.asarray(s, float), np.asarray(t, float), 1)
        J = np.stack([d["s"], d["t"]], axis=-1)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        if np.any(np.abs(det) < DET_TOL):
            raise DegenerateJacobian(f"|det J| below {DET_TOL} at (s, t) = ({s}, {t})")
        return JacobianSample((s, t), J, det)


@dataclass
class JacobianSample:
    point: tuple
    J: np.ndarray
    detJ: np.ndarray


class AnalyticMap(GeometryMap):
    """``G(s, t) = (1 - s) A(t) + s B(t)`` for two analytic boundary curves."""

    def __init__(self, kind: str, A: Curve, B: Curve, params: dict):
        self.kind = kind
        self.A = A
        self.B = B
        self.params = dict(params)

    def derivatives(self, s, t, max_order: int = 1) -> dict:
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        out = {}
        a0, b0 = self.A(t), self.B(t)
        out["x"] = _xy(a0 + s * (b0 - a0))
        if max_order >= 1:
            a1, b1 = self.A(t, 1), self.B(t, 1)
            out["s"] = _xy(np.broadcast_to(b0 - a0, np.broadcast(s, t).shape))
            out["t"] = _xy(a1 + s * (b1 - a1))
        if max_order >= 2:
            a2, b2 = self.A(t, 2), self.B(t, 2)
            shape = np.broadcast(s, t).shape
            out["ss"] = np.zeros(shape + (2,))
            out["st"] = _xy(np.broadcast_to(b1 - a1, shape))
            out["tt"] = _xy(a2 + s * (b2 - a2))
        return out


def _xy(z) -> np.ndarray:
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1)


def analytic_map(kind: str, **params) -> AnalyticMap:
    """Geometry maps of the benchmark problems: ``case1``, ``case2``, ``annulus``, ``identity``."""
    if kind == "case1":
        r = params.get("r", 1.0)
        beta = params.get("beta", math.pi / 4)
        C = params.get("C", 2 * r * math.cos(beta) / (1 - math.cos(beta)))
        R = params.get("R", C + 2 * r)
        A = Curve(amp=r, omega=2 * beta)
        B = Curve(c0=-C, amp=R, omega=beta)
        return AnalyticMap(kind, A, B, dict(r=r, beta=beta, C=C, R=R))
    if kind == "case2":
        r = params.get("r", 1.0)
        R = params.get("R", 2.0)
        C = params.get("C", 1 / math.sqrt(2))
        gamma = params.get("gamma", math.pi / 4)
        beta = params.get("beta", math.pi / 2)
        A = Curve(amp=r, omega=beta)
        B = Curve(c0=complex(R * C, R * C), amp=R, omega=2 * beta, phase=-gamma)
        return AnalyticMap(kind, A, B, dict(r=r, R=R, C=C, gamma=gamma, beta=beta))
    if kind == "annulus":
        r = params.get("r", 1.0)
        R = params.get("R", 2.0)
        A = Curve(amp=r, omega=math.pi / 2)
        B = Curve(amp=R, omega=math.pi / 2)
        return AnalyticMap(kind, A, B, dict(r=r, R=R))
    if kind == "identity":
        return AnalyticMap(kind, Curve(lin=1j), Curve(c0=1.0, lin=1j), {})
    raise ValueError(f"unknown map kind {kind!r}")


class ControlNetMap(GeometryMap):
    """``G(s, t) = sum_kl P_kl N_k(s) M_l(t)``."""

    def __init__(self, space: TensorSpace, control_points: np.ndarray):
        self.kind = "control_net"
        self.space = space
        self.control_points = np.asarray(control_points, dtype=float)
        if self.control_points.shape != (space.n1, space.n2, 2):
            raise ValueError(f"control net must have shape {(space.n1, space.n2, 2)}")
        self._coll_cache = {}

    def derivatives(self, s, t, max_order: int = 1) -> dict:
        """Pointwise evaluation at matching arrays ``s`` and ``t``."""
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        shape = s.shape
        s, t = s.ravel(), t.ravel()
        sp = self.space
        p1, p2 = sp.degrees
        os_, Vs = sp.s_space.eval_orders(s, max_order)
        ot, Vt = sp.t_space.eval_orders(t, max_order)
        P = self.control_points
        idx_s = os_[:, None] + np.arange(p1 + 1)
        idx_t = ot[:, None] + np.arange(p2 + 1)
        Ploc = P[idx_s[:, :, None], idx_t[:, None, :]]         # (N, p1+1, p2+1, 2)

        def comb(a, b):
            v = np.einsum("na,nb,nabc->nc", Vs[a], Vt[b], Ploc)
            return v.reshape(shape + (2,))
        out = {"x": comb(0, 0)}
        if max_order >= 1:
            out["s"] = comb(1, 0)
            out["t"] = comb(0, 1)
        if max_order >= 2:
            out["ss"] = comb(2, 0)
            out["st"] = comb(1, 1)
            out["tt"] = comb(0, 2)
        return out

    def grid_derivatives(self, s, t, max_order: int = 1) -> dict:
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        Ms = self._collocation(self.space.s_space, s, max_order)
        Mt = self._collocation(self.space.t_space, t, max_order)
        P = self.control_points

        def comb(a, b):
            return np.stack([Ms[a] @ P[:, :, c] @ Mt[b].T for c in range(2)], axis=-1)
        out = {"x": comb(0, 0)}
        if max_order >= 1:
            out["s"] = comb(1, 0)
            out["t"] = comb(0, 1)
        if max_order >= 2:
            out["ss"] = comb(2, 0)
            out["st"] = comb(1, 1)
            out["tt"] = comb(0, 2)
        return out

    def _collocation(self, ts, x, max_order):
        cache = self._coll_cache
        key = (id(ts), x.tobytes(), max_order)
        if key not in cache:
            if len(cache) > 8:
                cache.clear()
            offs, vals = ts.eval_orders(x, max_order)
            M = np.zeros((max_order + 1, x.size, ts.n))
            rows = np.arange(x.size)[:, None]
            M[:, rows, offs[:, None] + np.arange(ts.degree + 1)] = vals
            cache[key] = M
        return cache[key]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "l", "x", "y"])
            for l in range(self.space.n2):
                for k in range(self.space.n1):
                    x, y = self.control_points[k, l]
                    w.writerow([k, l, repr(float(x)), repr(float(y))])


def polynomial_greville(ts: TBSplineSpace) -> np.ndarray:
    """Knot averages ``(xi_{k+1} + ... + xi_{k+p}) / p`` of the knot vector."""
    p = ts.degree
    xi = ts.knots.knots
    if p == 0:
        return 0.5 * (xi[:-1] + xi[1:])
    return np.array([xi[k + 1: k + p + 1].mean() for k in range(ts.n)])


def tb_greville_points(ts: TBSplineSpace) -> np.ndarray | None:
    """Greville abscissae of the TB space itself, or ``None`` when ``x`` is not in it."""
    if not ts.space.contains_identity:
        return None
    g = greville_abscissae(ts)
    return g if np.all(np.diff(g) > 0) else None


def fit_control_net(gmap: GeometryMap, space: TensorSpace, fallback: bool = True) -> ControlNetMap:
    """Interpolate ``gmap`` on the tensor grid of polynomial Greville points.

    Every fit is verified at interior points of each element that are not
    fitting points.  With steep exponentials some TB-splines are almost zero at
    all knot averages and that interpolation is numerically singular.  Then, if
    ``fallback`` is set, the Greville points of the TB space are tried (they
    follow the layers), and finally least squares on an oversampled grid
    clustered towards the element ends.  A map outside the space is
    approximated by the first well-posed interpolant, with a warning;
    :class:`InterpolationSingular` is raised when no fit is well posed.
    """
    ss, tt = space.s_space, space.t_space
    candidates = [("polynomial Greville", polynomial_greville(ss), polynomial_greville(tt))]
    if fallback:
        gs, gt = tb_greville_points(ss), tb_greville_points(tt)
        if gs is not None or gt is not None:
            candidates.append(("TB Greville", polynomial_greville(ss) if gs is None else gs,
                               polynomial_greville(tt) if gt is None else gt))
        candidates.append(("oversampled least squares", _oversampled(ss), _oversampled(tt)))
    S, T = np.meshgrid(_check_points(ss), _check_points(tt), indexing="ij")
    X = gmap(S, T)
    tol = FIT_TOL * max(1.0, float(np.abs(X).max()))
    failures = []
    best = None
    for name, gs, gt in candidates:
        try:
            net = ControlNetMap(space, _separable_fit(gmap, space, gs, gt))
        except InterpolationSingular as exc:
            failures.append(f"{name}: {exc}")
            continue
        err = float(np.abs(net(S, T) - X).max())
        if err <= tol:
            if failures:
                log.info("geometry fitted by %s after: %s", name, "; ".join(failures))
            return net
        failures.append(f"{name}: misses the map by {err:.2e} between fit points")
        if best is None:
            best = (net, err)
    if best is None:
        raise InterpolationSingular("geometry fit failed; " + "; ".join(failures))
    # the map is not in the space: keep the first well-posed interpolant
    log.warning("geometry is approximated, not reproduced (error %.2e)", best[1])
    return best[0]


def _check_points(ts: TBSplineSpace) -> np.ndarray:
    # golden-section points in every element, away from Greville points and knots
    x = ts.breakpoints
    u = np.array([0.381966011250105, 0.618033988749895])
    return (x[:-1, None] + np.diff(x)[:, None] * u).ravel()


def _oversampled(ts: TBSplineSpace, per_element: int = LS_PER_ELEMENT) -> np.ndarray:
    x = ts.breakpoints
    # Chebyshev-Lobatto spacing resolves layers at the element ends
    u = 0.5 - 0.5 * np.cos(np.pi * np.arange(per_element + 1) / per_element)
    pts = (x[:-1, None] + np.diff(x)[:, None] * u[None, :-1]).ravel()
    return np.concatenate([pts, x[-1:]])


def _separable_fit(gmap, space, gs, gt) -> np.ndarray:
    """Solve ``Ms P Mt^T = X`` per component (least squares when oversampled)."""
    Ms = space.s_space.collocation(gs)
    Mt = space.t_space.collocation(gt)
    S, T = np.meshgrid(gs, gt, indexing="ij")
    X = gmap(S, T)                                                # (len(gs), len(gt), 2)
    # basis values are bounded by one, so 1/sigma_min bounds the error
    # amplification from sampled data to the fitted map
    for M in (Ms, Mt):
        smin = np.linalg.svd(M, compute_uv=False)[-1]
        if not smin * FIT_AMPLIFICATION >= 1.0:
            raise InterpolationSingular(
                f"geometry collocation matrix is numerically singular (sigma_min {smin:.2e})")
    A = np.linalg.lstsq(Ms, X.reshape(len(gs), -1), rcond=None)[0]
    A = A.reshape(space.n1, len(gt), 2).transpose(1, 0, 2).reshape(len(gt), -1)
    P = np.linalg.lstsq(Mt, A, rcond=None)[0]
    P = P.reshape(space.n2, space.n1, 2).transpose(1, 0, 2)
    fitted = np.stack([Ms @ P[:, :, c] @ Mt.T for c in range(2)], axis=-1)
    resid = np.abs(fitted - X).max() if np.all(np.isfinite(fitted)) else np.inf
    if resid > FIT_TOL * max(1.0, np.abs(X).max()):
        raise InterpolationSingular(f"geometry fit residual {resid:.2e}")
    return P
