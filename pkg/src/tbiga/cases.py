"""Benchmark problems, their preset parameters and the run/sweep driver."""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, TBIGAError
from .galerkin import (SUPG, ProblemDefinition, QuadratureRule, assemble, sample_solution,
                       select_quadrature, solve)
from .geometry import TensorSpace, analytic_map, fit_control_net, tensor_space

log = logging.getLogger(__name__)

CASES = ("cs1", "cs2", "cs3", "cs4", "cs5")
SATURATION = 1e-14

# Preset parameters; every value here is dumped to the golden preset file.
PRESETS = {
    "cs1": dict(geometry="case1", r=1.0, beta=math.pi / 4,
                C=2 * math.cos(math.pi / 4) / (1 - math.cos(math.pi / 4)),
                R=2 * math.cos(math.pi / 4) / (1 - math.cos(math.pi / 4)) + 2.0,
                kappa=1.0, exact="5*((x+4)**2+(y+3)**2)+x*y", source=-20.0,
                p1=4, p2=4, t_phases="pi/4,pi/2", m="1,2,4,8,16,32", bc="least_squares",
                grid=501),
    "cs2": dict(geometry="case2", r=1.0, R=2.0, C=1 / math.sqrt(2), gamma=math.pi / 4,
                beta=math.pi / 2, kappa=1.0, exact="4*((x+4)**2+y**2)+x*(y-4)", source=-16.0,
                p1=4, p2=4, m="1,2,4,8,16,32", bc="least_squares", grid=501),
    "cs3": dict(geometry="case2", r=1.0, R=2.0, C=1 / math.sqrt(2), gamma=math.pi / 4,
                beta=math.pi / 2, kappa=1.0, a_modulus=100.0, flow="radial", source=1.0,
                p1=4, p2=4, ell=3, m="8", bc="least_squares", grid=501),
    "cs4": dict(geometry="annulus", r=1.0, R=2.0, kappa=1.0, a_modulus=100.0,
                flow="tangential", source=1.0, p1=2, p2=6, ell=3, m="6", bc="least_squares",
                grid=501),
    "cs5": dict(geometry="identity", kappa=1.0, a_modulus=1.0e4, theta=math.pi / 4,
                source=0.0, jump=0.2, p1=6, p2=6, m="50", bc="schoenberg", grid=3001),
}


def dump_presets() -> str:
    """All presets as INI text with round-trip float formatting."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for name, params in PRESETS.items():
        cp[name] = {k: (repr(v) if isinstance(v, float) else str(v)) for k, v in params.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _interp_params(a_min: float, a_max: float, ell: int) -> list[float]:
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if ell == 1:
        return [0.5 * (a_max + a_min)]
    return [a_min + (i - 1) / (ell - 1) * (a_max - a_min) for i in range(1, ell + 1)]


def shape_params_radial(a_modulus: float, r: float, R: float, ell: int) -> list[float]:
    """Exponential rates spanning the radial travel distances of the flow."""
    return _interp_params(a_modulus * (math.sqrt(2) * R - r), a_modulus * (2 * R - r), ell)


def shape_params_tangential(a_modulus: float, r: float, R: float, ell: int) -> list[float]:
    """Exponential rates spanning the arc lengths of the flow on a quarter annulus."""
    return _interp_params(a_modulus * math.pi / 2 * r, a_modulus * math.pi / 2 * R, ell)


@dataclass
class RunConfig:
    case: str
    m: list = field(default_factory=lambda: [8])
    p: int | None = None
    ell: int | None = None
    space: str = "tb"              # tb | poly
    bc: str | None = None
    supg: bool = False
    full_residual: bool = True
    quad_mult: int | None = None
    grid: int | None = None
    out: str | None = None

    def preset(self) -> dict:
        if self.case not in PRESETS:
            raise ValueError(f"unknown case {self.case!r}")
        return PRESETS[self.case]


@dataclass
class Setup:
    """Everything needed for one run at one mesh size."""

    problem: ProblemDefinition
    space: TensorSpace
    exact_map: object
    description: str
    bc: str
    grid: int
    quad: QuadratureRule


def _roots_harmonic(beta: float, q: int):
    return [(0.0, k * beta) for k in range(1, q + 1)]


def case_spaces(cfg: RunConfig) -> tuple[list, int, list, int, str]:
    """Root lists and degrees per direction for the configured case and space variant."""
    P = cfg.preset()
    poly = cfg.space == "poly"
    case = cfg.case
    if case == "cs1":
        p1, p2 = P["p1"], P["p2"]
        t = [] if poly else [(0.0, math.pi / 4), (0.0, math.pi / 2)]
        return [], p1, t, p2, "P4 x P4(+-i pi/4, +-i pi/2)"
    if case == "cs2":
        p = cfg.p or P["p1"]
        q = p // 2
        if p != 2 * q:
            raise ValueError("case cs2 needs an even degree")
        t = [] if poly else _roots_harmonic(P["beta"], q)
        return [], p, t, p, f"P{p} x P{p}(harmonic q={q})"
    if case == "cs3":
        p1 = cfg.p or P["p1"]
        p2 = P["p2"]
        ell = P["ell"] if cfg.ell is None else cfg.ell
        s = [] if (poly or ell == 0) else [(a, 0.0) for a in
                                           shape_params_radial(P["a_modulus"], P["r"], P["R"], ell)]
        t = [] if poly else _roots_harmonic(P["beta"], p2 // 2)
        return s, p1, t, p2, f"P{p1}(ell={ell}) x P{p2}(harmonic)"
    if case == "cs4":
        p1 = P["p1"]
        p2 = cfg.p or P["p2"]
        ell = P["ell"] if cfg.ell is None else cfg.ell
        exps = [] if ell == 0 else [(a, 0.0) for a in
                                    shape_params_tangential(P["a_modulus"], P["r"], P["R"], ell)]
        t = [] if poly else exps + [(0.0, math.pi / 2)]
        return [], p1, t, p2, f"P{p1} x P{p2}(ell={ell}, +-i pi/2)"
    if case == "cs5":
        p = cfg.p or P["p1"]
        a, th = P["a_modulus"], P["theta"]
        s = [] if poly else [(a * math.cos(th), 0.0)]
        t = [] if poly else [(a * math.sin(th), 0.0)]
        return s, p, t, p, f"P{p}(a cos) x P{p}(a sin)"
    raise ValueError(f"unknown case {case!r}")


def _expr(text: str):
    code = compile(text, "<exact>", "eval")
    return lambda x, y: eval(code, {"__builtins__": {}}, {"x": x, "y": y})


def build_setup(cfg: RunConfig, m: int) -> Setup:
    P = cfg.preset()
    s_roots, p1, t_roots, p2, desc = case_spaces(cfg)
    space = tensor_space(s_roots, p1, t_roots, p2, m)
    params = {k: P[k] for k in ("r", "R", "C", "gamma", "beta") if k in P}
    exact_map = analytic_map(P["geometry"], **params)
    geom = exact_map if P["geometry"] == "identity" else fit_control_net(exact_map, space)
    src = float(P["source"])
    source = lambda x, y: np.full(np.shape(x), src)
    exact = _expr(P["exact"]) if "exact" in P else None
    advection = None
    boundary = exact
    if "flow" in P or cfg.case == "cs5":
        a = P["a_modulus"]
        if cfg.case == "cs5":
            th = P["theta"]
            advection = lambda x, y: np.stack(np.broadcast_arrays(
                np.full(np.shape(x), a * math.cos(th)), np.full(np.shape(y), a * math.sin(th))),
                axis=-1)
            jump = P["jump"]
            one = lambda x, y: np.ones(np.shape(x))
            zero = lambda x, y: np.zeros(np.shape(x))
            boundary = {"bottom": one, "left": lambda x, y: (np.asarray(y) < jump).astype(float),
                        "right": zero, "top": zero}
        elif P["flow"] == "radial":
            advection = lambda x, y: a * np.stack([x, y], axis=-1) / np.hypot(x, y)[..., None]
            boundary = None
        else:
            advection = lambda x, y: a * np.stack([-y, x], axis=-1) / np.hypot(x, y)[..., None]
            boundary = None
    problem = ProblemDefinition(geom, P["kappa"], advection, source, boundary, exact,
                                boundary_geometry=exact_map)
    if cfg.quad_mult is not None:
        quad = select_quadrature(space, cfg.quad_mult)
    else:
        quad = select_quadrature(space)
    if cfg.space == "poly":
        desc = f"P{p1} x P{p2}"
    if cfg.supg:
        desc += " +SUPG"
    return Setup(problem, space, exact_map, desc, cfg.bc or P["bc"], cfg.grid or P["grid"], quad)


@dataclass
class RunResult:
    case: str
    space: str
    p1: int
    p2: int
    m: int
    dof: int
    n: int
    quad: int
    metrics: dict
    seconds: float
    validity: str = "valid"
    coefficients: np.ndarray | None = None
    setup: Setup | None = None
    sample: object = None

    def rows(self):
        for k, v in self.metrics.items():
            yield dict(case=self.case, space=self.space, p1=self.p1, p2=self.p2, m=self.m,
                       dof=self.n, quad=self.quad, metric=k, value=v)


def run_single(cfg: RunConfig, m: int, keep: bool = False) -> RunResult:
    t0 = time.perf_counter()
    try:
        st = build_setup(cfg, m)
        supg = SUPG(full_residual=cfg.full_residual) if cfg.supg else None
        system = assemble(st.problem, st.space, st.quad, supg=supg, bc=st.bc)
        c = solve(system)
        sample = sample_solution(st.space, st.problem.geometry, c, st.grid, st.problem.exact)
    except TBIGAError as exc:
        raise type(exc)(f"{cfg.case} ({cfg.space}) m={m}: {exc}") from exc
    metrics = {"max": sample.max, "min": sample.min}
    if sample.error is not None:
        metrics["linf_error"] = sample.error
    else:
        metrics["overshoot"] = overshoot(sample.u, cfg.case)
    p1, p2 = st.space.degrees
    validity = "valid" if (st.space.s_space.validity == "valid"
                           and st.space.t_space.validity == "valid") else "suspect"
    res = RunResult(cfg.case, st.description, p1, p2, m, system.dof, st.space.n, st.quad.points,
                    metrics, time.perf_counter() - t0, validity)
    if keep:
        res.coefficients = c
        res.setup = st
        res.sample = sample
    return res


def overshoot(u: np.ndarray, case: str) -> float:
    """Relative violation of the data range.

    cs3/cs4 have ``f = 1`` and zero boundary values, so the exact solution is
    nonnegative: the metric is the undershoot below zero relative to ``max u``.
    cs5 data lie in ``[0, 1]``: the metric is the larger excursion outside it.
    """
    umax, umin = float(u.max()), float(u.min())
    if case == "cs5":
        return max(umax - 1.0, -umin, 0.0)
    return max(0.0, -umin) / umax if umax > 0 else math.inf


def run_case(cfg: RunConfig, keep: bool = False) -> list[RunResult]:
    results = []
    for m in cfg.m:
        r = run_single(cfg, int(m), keep)
        log.info("%s %s m=%d: %s (%.1fs)", cfg.case, r.space, r.m, r.metrics, r.seconds)
        results.append(r)
    return results


def estimate_orders(errors) -> list[float]:
    """``log2(e_j / e_{j+1})`` for consecutive errors on halved meshes."""
    errors = [float(e) for e in errors]
    for e in errors:
        if e < SATURATION:
            raise DegenerateError(f"error {e:.3e} below {SATURATION}: order saturated")
    return [math.log2(a / b) for a, b in zip(errors[:-1], errors[1:])]


CSV_COLUMNS = ("case", "space", "p1", "p2", "m", "dof", "quad", "metric", "value")


def write_results_csv(results, path) -> None:
    """One row per (run, metric); floats are written with ``repr`` for exact round trips."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in results:
            for row in r.rows():
                row["value"] = repr(float(row["value"]))
                w.writerow(row)


def summary(results, orders=None) -> dict:
    out = {"runs": [dict(case=r.case, space=r.space, m=r.m, dof=r.n, interior=r.dof,
                         quad=r.quad, validity=r.validity, seconds=round(r.seconds, 3),
                         metrics=r.metrics) for r in results]}
    if orders is not None:
        out["orders"] = orders
    return out


def write_summary(results, path, orders=None) -> None:
    with open(path, "w") as fh:
        json.dump(summary(results, orders), fh, indent=2)


def load_config(path) -> RunConfig:
    """Read a ``[run]`` section of an INI file into a :class:`RunConfig`."""
    cp = configparser.ConfigParser(interpolation=None)
    with open(path) as fh:
        cp.read_file(fh)
    sec = cp["run"]
    cfg = RunConfig(case=sec.get("case"))
    if "m" in sec:
        cfg.m = [int(v) for v in sec.get("m").split(",")]
    for key, conv in (("p", int), ("ell", int), ("quad_mult", int), ("grid", int)):
        if key in sec:
            setattr(cfg, key, conv(sec.get(key)))
    for key in ("space", "bc", "out"):
        if key in sec:
            setattr(cfg, key, sec.get(key))
    for key in ("supg", "full_residual"):
        if key in sec:
            setattr(cfg, key, sec.getboolean(key))
    return cfg


def default_mesh_list(case: str) -> list[int]:
    return [int(v) for v in PRESETS[case]["m"].split(",")]


__all__ = ["PRESETS", "RunConfig", "RunResult", "run_case", "run_single", "estimate_orders",
           "shape_params_radial", "shape_params_tangential", "dump_presets", "load_config",
           "build_setup", "overshoot", "default_mesh_list", "write_results_csv", "write_summary",
           "summary", "case_spaces", "CASES"]
