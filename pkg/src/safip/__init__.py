"""Stochastic sampling of the zero set of residual functions over a box."""

from .benchmarks import BenchmarkCase, coverage, get_case, reference_points, registry
from .enhanced import solve_enhanced
from .estimator import SAFIP, EnhancedSAFIP
from .expr import ExprError, Expression, parse
from .geometry import BoxDomain, RngStream, distance, sample_ball, sample_box
from .metrics import TableRow, export_points, format_table, to_table_row
from .problem import FieldEvaluationError, Problem, ScalarField, evaluate, is_solution, normalize
from .solver import SolveReport, Solution, SolverConfig, rn_bound, solve, trace_violations

__version__ = "0.1.0"

__all__ = [
    "BenchmarkCase", "BoxDomain", "EnhancedSAFIP", "ExprError", "Expression", "FieldEvaluationError",
    "Problem", "RngStream", "SAFIP", "ScalarField", "SolveReport", "Solution", "SolverConfig", "TableRow",
    "coverage", "distance", "evaluate", "export_points", "format_table", "get_case", "is_solution",
    "normalize", "parse", "reference_points", "registry", "rn_bound", "sample_ball", "sample_box",
    "solve", "solve_enhanced", "to_table_row", "trace_violations",
]
