"""Tchebycheffian Bernstein bases on a single interval via Hermite interpolation."""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.linalg import lapack

from .ect import LocalGenerators, RootVector, critical_length_lower_bound
from .errors import SingularHermiteSystem

POU_TOL = 1e-10
NONNEG_TOL = -1e-10
ZERO_TOL = 1e-8
SAMPLES = 101
HERMITE_MP_DPS = 60


@dataclass(frozen=True, eq=False)
class LocalBasis:
    """Bernstein functions ``B_j = sum_i coeff_matrix[j, i] psi_i`` on ``[a, b]``.

    ``psi`` are the conditioned local generators (see :class:`LocalGenerators`),
    which depend only on the element length.
    """

    space: RootVector
    interval: tuple[float, float]
    coeff_matrix: np.ndarray
    gens: LocalGenerators
    validity: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def a(self):
        return self.interval[0]

    @property
    def b(self):
        return self.interval[1]

    @property
    def h(self):
        return self.interval[1] - self.interval[0]

    @property
    def degree(self):
        return self.space.degree

    def eval_u(self, u, order: int = 0) -> np.ndarray:
        """``D_u^order`` of all Bernstein functions at local coordinates ``u``."""
        return self.gens(u, order) @ self.coeff_matrix.T

    def eval_u_orders(self, u, max_order: int) -> np.ndarray:
        return self.gens.eval_orders(u, max_order) @ self.coeff_matrix.T

    def end_derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """``(Da, Db)`` with ``D[l, j] = D_u^l B_j`` at ``u=0`` / ``u=1``, ``l = 0..p``."""
        return _end_derivatives(self)

    def end_functionals(self, ops) -> tuple[np.ndarray, np.ndarray]:
        """Like :meth:`end_derivatives` for operators ``(roots_u, power)`` from ``ops``."""
        Fa = np.array([self.gens.apply_operator(0.0, r, s) for r, s in ops]) @ self.coeff_matrix.T
        Fb = np.array([self.gens.apply_operator(1.0, r, s) for r, s in ops]) @ self.coeff_matrix.T
        return Fa, Fb

    def end_functionals_mp(self, ops):
        """:meth:`end_functionals` in mpmath; the double coefficient matrix is taken as exact."""
        C = mpmath.matrix(self.coeff_matrix.T.tolist())
        Fa = mpmath.matrix([self.gens.apply_operator_mp(0.0, r, s) for r, s in ops]) * C
        Fb = mpmath.matrix([self.gens.apply_operator_mp(1.0, r, s) for r, s in ops]) * C
        return Fa, Fb

    def to_bernstein(self, gen_coeffs) -> np.ndarray:
        """Bernstein coefficients of the function ``sum_i gen_coeffs[i] psi_i``."""
        return np.linalg.solve(self.coeff_matrix.T, gen_coeffs)


def _end_derivatives(basis: LocalBasis):
    p = basis.degree
    d = basis.eval_u_orders(np.array([0.0, 1.0]), p)
    return d[:, 0, :], d[:, 1, :]


def _solve_complete_pivoting(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # equilibrate rows and columns first; pivoting is scale dependent
    r = 1.0 / np.abs(A).max(axis=1)
    As = A * r[:, None]
    c = 1.0 / np.abs(As).max(axis=0)
    As = As * c[None, :]
    lu, ipiv, jpiv, info = lapack.dgetc2(As)
    if info > 0:
        raise SingularHermiteSystem("Hermite collocation matrix is numerically singular")
    x, scale = lapack.dgesc2(lu, (rhs * r).astype(float), ipiv, jpiv)
    return c * x / scale


def _hermite_rows(Va, Vb, j, p):
    if j == p:
        return np.vstack([Va[:p], Vb[:1]])
    return np.vstack([Va[: j + 1], Vb[: p - j]])


def build_bernstein(space: RootVector, a: float, b: float,
                    gens: LocalGenerators | None = None) -> LocalBasis:
    """Solve the Hermite problems defining the Tchebycheffian Bernstein basis on ``[a, b]``.

    ``B_0`` has ``B_0(a) = 1``; for ``0 < j < p`` the normalization is
    ``D^j B_j(a) = -sum_{i<j} D^j B_i(a)``; ``B_p(b) = 1``.  Every ``B_j``
    vanishes to order ``j`` at ``a`` and to order ``p - j`` at ``b``.
    Derivatives are taken in the local coordinate ``u``, which equilibrates
    the derivative orders.
    """
    if not b > a:
        raise ValueError("interval must satisfy a < b")
    p = space.degree
    if gens is None:
        gens = LocalGenerators(space, b - a)
    d = gens.eval_orders(np.array([0.0, 1.0]), p)
    Va, Vb = d[:, 0, :], d[:, 1, :]
    C = np.zeros((p + 1, p + 1))
    singular = None
    for j in range(p + 1):
        A = _hermite_rows(Va, Vb, j, p)
        # condition estimate guards against solvable-but-meaningless systems
        s = np.linalg.svd(A / np.abs(A).max(axis=1, keepdims=True), compute_uv=False)
        if s[-1] <= 1e-14 * s[0]:
            if not b - a < critical_length_lower_bound(space):
                # beyond the guaranteed range the system may be genuinely singular
                raise SingularHermiteSystem(
                    f"Hermite system for B_{j} on [{a}, {b}] is singular (interval too long?)")
            singular = j
            break
        rhs = np.zeros(p + 1)
        if j == p:
            rhs[p] = 1.0
        else:
            rhs[j] = (1.0 if j == 0 else 0.0) - sum(Va[j] @ C[i] for i in range(j))
        C[j] = _solve_complete_pivoting(A, rhs)
    if singular is None:
        validity, diag = _check(space, C, gens, Va, Vb)
    if singular is not None or diag["partition_of_unity"] > POU_TOL \
            or diag["zero_structure"] > ZERO_TOL:
        # steep exponentials: the double solve loses digits, redo it in extended precision
        try:
            C = _solve_hermite_mp(gens, p, hermite_dps(space, b - a))
        except ZeroDivisionError:
            C = None
        if C is None or not np.all(np.isfinite(C)):
            j = 0 if singular is None else singular
            raise SingularHermiteSystem(
                f"Hermite system for B_{j} on [{a}, {b}] is singular (interval too long?)")
        validity, diag = _check(space, C, gens, Va, Vb)
        diag["extended_precision"] = True
    return LocalBasis(space, (float(a), float(b)), C, gens, validity, diag)


def hermite_dps(space: RootVector, h: float) -> int:
    """Working precision for the extended solve: the exponential range costs digits."""
    spread = sum(abs(r.alpha) * r.multiplicity for r in space.roots) * h / np.log(10.0)
    return int(max(HERMITE_MP_DPS, 40 + spread))


def _solve_hermite_mp(gens: LocalGenerators, p: int, dps: int) -> np.ndarray:
    with mpmath.workdps(dps):
        Va = [gens.apply_operator_mp(0.0, [], l) for l in range(p + 1)]
        Vb = [gens.apply_operator_mp(1.0, [], l) for l in range(p + 1)]
        C = []
        for j in range(p + 1):
            A = mpmath.matrix(Va[:p] + Vb[:1] if j == p else Va[: j + 1] + Vb[: p - j])
            rhs = mpmath.matrix(p + 1, 1)
            if j == p:
                rhs[p] = 1
            else:
                acc = sum(mpmath.fsum(a * c for a, c in zip(Va[j], C[i])) for i in range(j))
                rhs[j] = (1 if j == 0 else 0) - acc
            x = mpmath.lu_solve(A, rhs)
            C.append([x[i] for i in range(p + 1)])
        return np.array([[float(v) for v in row] for row in C])


def _check(space, C, gens, Va, Vb):
    p = space.degree
    u = np.linspace(0.0, 1.0, SAMPLES)
    vals = gens(u, 0) @ C.T
    pou = float(np.max(np.abs(vals.sum(axis=1) - 1.0)))
    neg = float(vals.min())
    DA = Va @ C.T
    DB = Vb @ C.T
    # zero structure: D^l B_j(a) = 0 for l < j, D^l B_j(b) = 0 for l < p - j
    scale = np.maximum(np.abs(DA).max(axis=1), np.abs(DB).max(axis=1))
    zero_err = 0.0
    for j in range(p + 1):
        for l in range(j):
            zero_err = max(zero_err, abs(DA[l, j]) / scale[l])
        for l in range(p - j):
            zero_err = max(zero_err, abs(DB[l, j]) / scale[l])
    diag = {"partition_of_unity": pou, "min_value": neg, "zero_structure": zero_err}
    ok = pou <= POU_TOL and neg >= NONNEG_TOL and zero_err <= ZERO_TOL
    return ("valid" if ok else "suspect"), diag


def eval_local(basis: LocalBasis, x, derivative_order: int = 0) -> np.ndarray:
    """``D_x^r B_j(x)`` for ``j = 0..p``; shape ``x.shape + (p+1,)``."""
    x = np.asarray(x, dtype=float)
    u = (x - basis.a) / basis.h
    return basis.eval_u(u, derivative_order) / basis.h ** derivative_order
