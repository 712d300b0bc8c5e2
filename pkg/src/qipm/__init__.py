"""Homogeneous self-dual predictor-corrector LP solver with pluggable linear-system backends."""

from .lp_model import Form, HsdInstance, HsdState, LpProblem, ProblemError, embed, load_problem, residuals, standardize
from .loop import SolveReport, SolverConfig, TraceRow, run, write_trace_csv
from .solvers import BackendError, BackendId
from .terminate import LpSolution, Status

__all__ = [
    "BackendError", "BackendId", "Form", "HsdInstance", "HsdState", "LpProblem", "LpSolution",
    "ProblemError", "SolveReport", "SolverConfig", "Status", "TraceRow", "embed", "load_problem",
    "residuals", "run", "standardize", "write_trace_csv",
]
