"""Tchebycheffian B-splines and isogeometric Galerkin solvers on the unit square."""
from .bernstein import LocalBasis, build_bernstein
from .cases import RunConfig, RunResult, estimate_orders, run_case, run_single
from .ect import Root, RootVector, make_space
from .errors import TBIGAError
from .galerkin import SUPG, ProblemDefinition, assemble, impose_dirichlet, sample_solution, solve
from .geometry import ControlNetMap, TensorSpace, analytic_map, fit_control_net, tensor_space
from .tbspline import (KnotVector, Partition, TBSplineSpace, build_tbspline_space,
                       check_knot_feasibility, greville_abscissae, knots_from_partition,
                       validate_basis)

__version__ = "0.1.0"

__all__ = ["LocalBasis", "build_bernstein", "RunConfig", "RunResult", "estimate_orders", "run_case",
           "run_single", "Root", "RootVector", "make_space", "TBIGAError", "SUPG",
           "ProblemDefinition", "assemble", "impose_dirichlet", "sample_solution", "solve",
           "ControlNetMap", "TensorSpace", "analytic_map", "fit_control_net", "tensor_space",
           "KnotVector", "Partition", "TBSplineSpace", "build_tbspline_space",
           "check_knot_feasibility", "greville_abscissae", "knots_from_partition", "validate_basis"]
