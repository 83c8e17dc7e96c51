"""Command-line harness: ``tbiga {basis,solve,sweep,compare,validate}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import cases
from .cases import RunConfig
from .ect import make_space
from .errors import DegenerateError, TBIGAError
from .galerkin import coefficient_grid, sample_solution
from .tbspline import (Partition, build_tbspline_space, check_knot_feasibility, format_diagnostics,
                       knots_from_partition, write_basis_csv)

EXIT_OK = 0
EXIT_VALIDITY = 2
EXIT_NUMERICAL = 3
FIELD_GRID = 101

log = logging.getLogger("tbiga")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _roots(text: str) -> list[tuple[float, float]]:
    """``"300,1.5708j,2+3j"`` -> ``[(300, 0), (0, 1.5708), (2, 3)]``."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok:
            z = complex(tok)
            out.append((z.real, abs(z.imag)))
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [run] section")
    common.add_argument("--case", choices=cases.CASES)
    common.add_argument("--m", type=_int_list, help="elements per direction (comma list)")
    common.add_argument("--p", type=int, help="degree override")
    common.add_argument("--ell", type=int, help="number of exponential shape parameters (cs3, cs4)")
    common.add_argument("--space", choices=("tb", "poly"), help="TB space or polynomial baseline")
    common.add_argument("--bc", choices=("ls", "schoenberg"), help="boundary data treatment")
    common.add_argument("--supg", action="store_true", default=None, help="add SUPG stabilization")
    common.add_argument("--advective-residual", action="store_true",
                        help="SUPG without the diffusion term of the residual")
    common.add_argument("--quad-mult", type=int, help="quadrature points = mult * p")
    common.add_argument("--grid", type=int, help="sampling points per direction")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tbiga", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    b = sub.add_parser("basis", parents=[common], help="dump univariate basis samples")
    b.add_argument("--direction", choices=("s", "t"), default="s")
    b.add_argument("--roots", help="explicit roots, e.g. '300,1.5708j' (overrides --case)")
    b.add_argument("--samples", type=int, default=20, help="samples per element")
    b.add_argument("--order", type=int, default=0, help="derivative order")
    sub.add_parser("solve", parents=[common], help="single run")
    sub.add_parser("sweep", parents=[common], help="refinement study with estimated orders")
    sub.add_parser("compare", parents=[common], help="TB vs polynomial vs polynomial+SUPG")
    sub.add_parser("validate", parents=[common], help="knot feasibility and basis validity")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = cases.load_config(args.config) if args.config else RunConfig(case=args.case or "cs1")
    if args.case:
        cfg.case = args.case
    if args.m:
        cfg.m = args.m
    elif not args.config:
        cfg.m = cases.default_mesh_list(cfg.case)
    for key in ("p", "ell", "space", "quad_mult", "grid", "out"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.bc is not None:
        cfg.bc = "least_squares" if args.bc == "ls" else "schoenberg"
    if args.supg:
        cfg.supg = True
    if args.advective_residual:
        cfg.full_residual = False
    return cfg


def _outdir(cfg: RunConfig) -> str | None:
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _print_table(results) -> None:
    print(f"{'case':5s} {'space':34s} {'m':>5s} {'dof':>8s} {'quad':>5s}  metrics")
    for r in results:
        mets = "  ".join(f"{k}={v:.5g}" for k, v in r.metrics.items())
        flag = "" if r.validity == "valid" else "  [suspect basis]"
        print(f"{r.case:5s} {r.space:34s} {r.m:5d} {r.n:8d} {r.quad:5d}  {mets}{flag}")


def _finish(results, cfg, name, orders=None) -> int:
    out = _outdir(cfg)
    if out:
        cases.write_results_csv(results, os.path.join(out, f"{name}.csv"))
        cases.write_summary(results, os.path.join(out, f"{name}.json"), orders)
    return EXIT_OK if all(r.validity == "valid" for r in results) else EXIT_VALIDITY


def cmd_basis(args, cfg: RunConfig) -> int:
    m = cfg.m[0]
    if args.roots is not None:
        if args.p is None:
            raise SystemExit("--roots needs --p")
        roots, p = _roots(args.roots), args.p
    else:
        s_roots, p1, t_roots, p2, _ = cases.case_spaces(cfg)
        roots, p = (s_roots, p1) if args.direction == "s" else (t_roots, p2)
    ts = build_tbspline_space(make_space(roots, p), Partition.uniform(m, p), check=False)
    print(format_diagnostics(ts))
    out = _outdir(cfg)
    if out:
        path = os.path.join(out, f"basis_{args.direction}.csv")
        write_basis_csv(ts, path, args.samples, args.order)
        print(f"wrote {path}")
    return EXIT_OK if ts.validity == "valid" else EXIT_VALIDITY


def cmd_solve(args, cfg: RunConfig) -> int:
    r = cases.run_single(cfg, cfg.m[0], keep=True)
    _print_table([r])
    out = _outdir(cfg)
    if out:
        st = r.setup
        field = sample_solution(st.space, st.problem.geometry, r.coefficients,
                                min(st.grid, FIELD_GRID), keep_xy=True)
        field.to_csv(os.path.join(out, "field.csv"))
        np.savetxt(os.path.join(out, "coefficients.csv"), coefficient_grid(st.space, r.coefficients),
                   delimiter=",", fmt="%.17g")
        if hasattr(st.problem.geometry, "to_csv"):
            st.problem.geometry.to_csv(os.path.join(out, "control_net.csv"))
    return _finish([r], cfg, "solve")


def cmd_sweep(args, cfg: RunConfig) -> int:
    results = cases.run_case(cfg)
    _print_table(results)
    orders = None
    errs = [r.metrics.get("linf_error") for r in results]
    if len(results) >= 2 and all(e is not None for e in errs):
        try:
            orders = cases.estimate_orders(errs)
        except DegenerateError as exc:
            log.warning("%s", exc)
        else:
            print("orders: " + "  ".join(f"{o:.3f}" for o in orders))
    return _finish(results, cfg, "sweep", orders)


def cmd_compare(args, cfg: RunConfig) -> int:
    results = []
    for space, supg in (("tb", False), ("poly", False), ("poly", True)):
        variant = RunConfig(**{**cfg.__dict__, "space": space, "supg": supg})
        results.append(cases.run_single(variant, cfg.m[0]))
    _print_table(results)
    return _finish(results, cfg, "compare")


def cmd_validate(args, cfg: RunConfig) -> int:
    s_roots, p1, t_roots, p2, desc = cases.case_spaces(cfg)
    ok = True
    for m in cfg.m:
        for label, roots, p in (("s", s_roots, p1), ("t", t_roots, p2)):
            space = make_space(roots, p)
            part = Partition.uniform(m, p)
            rep = check_knot_feasibility(space, knots_from_partition(part, p))
            ts = build_tbspline_space(space, part, check=False)
            print(f"[{cfg.case} m={m} {label}] {rep.criterion}: {'pass' if rep.passed else 'FAIL'}")
            print(format_diagnostics(ts))
            ok = ok and rep.passed and ts.validity == "valid"
    return EXIT_OK if ok else EXIT_VALIDITY


COMMANDS = {"basis": cmd_basis, "solve": cmd_solve, "sweep": cmd_sweep,
            "compare": cmd_compare, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = config_from_args(args)
    try:
        return COMMANDS[args.command](args, cfg)
    except TBIGAError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
