"""Predictor-corrector iteration on the self-dual embedding, with per-step traces."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import central_path
from .central_path import RestorationError
from .diagnostics import condition_number, epsilon_prime_threshold
from .kp_tree import MatrixStore, SamplingTree
from .lp_model import HsdInstance, HsdState, LpProblem, embed, residuals, standardize
from .newton import Direction, apply_step, assemble, complementarity_shift
from .solvers import Backend, BackendError, BackendId
from .terminate import LpSolution, Status, classify_infeasible, project, recover, support_set

STEP_TOLERANCE = 1e-4
MIN_STEP = 1e-12

TRACE_COLUMNS = (
    "t", "gamma", "mu", "tau", "theta", "delta", "proximity", "kappa",
    "frobenius", "cost_units", "restoration_steps", "residual_norm",
)


class StepLengthError(RuntimeError):
    """No step of length at least ``MIN_STEP`` stays in the outer neighborhood."""


class Termination(str, Enum):
    CONTINUE = "Continue"
    OPTIMAL = "Optimal"
    TAU_COLLAPSE = "TauCollapse"


@dataclass(frozen=True)
class SolverConfig:
    backend: BackendId = BackendId.EXACT
    epsilon: float = 1e-8
    eps1: Optional[float] = None
    eps2: Optional[float] = None
    eps3: float = 1e-8
    max_iterations: Optional[int] = None
    beta_inner: float = 0.25
    beta_outer: float = 0.5
    seed: int = 0
    retry_c: int = 4
    restoration_max_steps: int = 20
    cg_tol: float = 1e-10
    # Feed equality-row residuals back into the right-hand side; None means
    # on for the simulated quantum backend only.
    residual_correction: Optional[bool] = None

    def __post_init__(self):
        object.__setattr__(self, "backend", BackendId(self.backend))
        if not 0 < self.beta_inner < self.beta_outer < 1:
            raise ValueError("need 0 < beta_inner < beta_outer < 1")
        for name in ("epsilon", "eps1", "eps2", "eps3"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.retry_c < 1:
            raise ValueError("retry_c must be at least 1")

    @property
    def tol_gap(self) -> float:
        return self.epsilon if self.eps1 is None else self.eps1

    @property
    def tol_infeasibility(self) -> float:
        return self.epsilon if self.eps2 is None else self.eps2

    def iteration_cap(self, n: int) -> int:
        """Explicit ``max_iterations`` or ``ceil(20 sqrt(n+1) ln((n+1)/min(e1 e3^2, e2 e3)))``."""
        if self.max_iterations is not None:
            return self.max_iterations
        e1, e2, e3 = self.tol_gap, self.tol_infeasibility, self.eps3
        return math.ceil(20 * math.sqrt(n + 1) * math.log((n + 1) / min(e1 * e3**2, e2 * e3)))

    @property
    def corrects_residuals(self) -> bool:
        if self.residual_correction is None:
            return self.backend is BackendId.QLSA
        return self.residual_correction

    def make_backend(self) -> Backend:
        return Backend(kind=self.backend, epsilon=self.epsilon, seed=self.seed,
                       retry_c=self.retry_c, cg_tol=self.cg_tol)


@dataclass
class TraceRow:
    t: int
    gamma: int
    mu: float
    tau: float
    theta: float
    delta: Optional[float]
    proximity: float
    kappa: float
    frobenius: float
    cost_units: float
    restoration_steps: int
    residual_norm: float
    # Diagnostics below are not part of the CSV.
    delta0: Optional[float] = None
    mu_before: float = 0.0
    orthogonality: float = 0.0
    direction_error: Optional[float] = None
    max_restoration_displacement: float = 0.0
    epsilon_prime_threshold: Optional[float] = None
    epsilon_prime_actual: Optional[float] = None
    touched_matrix_leaves: int = 0
    touched_rhs_leaves: int = 0
    backend_retries: int = 0
    backend_converged: bool = True

    def csv_values(self) -> list[str]:
        out = []
        for name in TRACE_COLUMNS:
            value = getattr(self, name)
            if value is None:
                out.append("")
            elif isinstance(value, (int, np.integer)) and not isinstance(value, bool):
                out.append(str(int(value)))
            else:
                out.append(f"{float(value):.12g}")
        return out


def write_trace_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_values())


@dataclass(eq=False)
class SolveReport:
    status: Status
    solution: LpSolution
    iterations: int
    trace: list
    final_state: HsdState
    termination: Termination

    def to_json(self, trace_path=None) -> dict:
        sol = self.solution
        return {
            "status": self.status.value,
            "x": sol.x_star.tolist(),
            "y": sol.y_star.tolist(),
            "s": sol.s_star.tolist(),
            "primal_objective": sol.objective_primal,
            "dual_objective": sol.objective_dual,
            "iterations": self.iterations,
            "trace_path": None if trace_path is None else str(trace_path),
        }


class _StoreTracker:
    """Keeps the sampling-tree copy of ``M`` and ``f`` in step with the iterate."""

    def __init__(self, system, full_rhs: bool = False):
        self.layout = system.block_layout
        self.matrix = MatrixStore(system.M)
        self.rhs = SamplingTree.build(system.f)
        # Residual-corrected systems also change the equality blocks of f.
        self.rhs_rows = range(self.layout.size) if full_rhs else self.layout.rhs_entries()

    def refresh(self, system) -> tuple[int, int]:
        entries = [(i, j, system.M[i, j]) for i, j in self.layout.state_entries()]
        touched = self.matrix.bulk_update(entries)
        rhs_touched = 0
        for i in self.rhs_rows:
            self.rhs.update(i, system.f[i])
            rhs_touched += 1
        return touched, rhs_touched


def _admissible(state: HsdState, direction: Direction, delta: float, beta: float) -> bool:
    x = state.x_bar + delta * direction.dx_bar
    s = state.s_bar + delta * direction.ds_bar
    return central_path.in_neighborhood(x, s, beta)


def seed_step(state: HsdState, direction: Direction) -> float:
    """``min(1, sqrt(mu / (8 ||dx o ds||)))`` on the concatenated blocks."""
    mu = central_path.mu(state)
    size = float(np.linalg.norm(direction.dx_bar * direction.ds_bar))
    if size == 0.0:
        return 1.0
    return min(1.0, math.sqrt(mu / (8.0 * size)))


def find_step_length(state: HsdState, direction: Direction, beta_outer: float = 0.5,
                     tol: float = STEP_TOLERANCE) -> float:
    """Largest ``delta`` in ``(0, 1]`` (to ``tol``) with ``v + delta d`` in ``N(beta_outer)``.

    Bisection between the seed step and 1. If the seed step is itself
    inadmissible it is halved until admissible.

    Raises
    ------
    StepLengthError
        When no admissible step of length ``MIN_STEP`` or more exists.
    """
    if _admissible(state, direction, 1.0, beta_outer):
        return 1.0
    lo = seed_step(state, direction)
    while not _admissible(state, direction, lo, beta_outer):
        lo *= 0.5
        if lo < MIN_STEP:
            raise StepLengthError("no admissible predictor step")
    hi = 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _admissible(state, direction, mid, beta_outer):
            lo = mid
        else:
            hi = mid
    return lo


def check_termination(instance: HsdInstance, state: HsdState, config: SolverConfig) -> Termination:
    """Collapse of ``tau`` first, then the scaled gap and infeasibility tests."""
    tau = state.tau
    if tau <= config.eps3:
        return Termination.TAU_COLLAPSE
    gap = float((state.x / tau) @ (state.s / tau))
    infeasibility = state.theta / tau * instance.infeasibility_norm
    if gap <= config.tol_gap and infeasibility <= config.tol_infeasibility:
        return Termination.OPTIMAL
    return Termination.CONTINUE


def _solve_direction(instance, state, gamma, backend, step, tracker, correct=False):
    system = assemble(instance, state, gamma, correct_residuals=correct)
    touched = tracker.refresh(system) if tracker is not None else (0, 0)
    kappa = condition_number(system.M)
    d, meta = backend.solve(system.M, system.f, step=step, kappa=kappa)
    m, n = instance.m, instance.n
    direction = complementarity_shift(state, Direction.from_vector(d, m, n), gamma, system.mu)
    reference = None
    if meta.reference is not None:
        reference = complementarity_shift(state, Direction.from_vector(meta.reference, m, n), gamma, system.mu)
    frob = tracker.matrix.frobenius() if tracker is not None else float(np.linalg.norm(system.M))
    return system, direction, reference, meta, kappa, frob, touched


def _bars_error(direction: Direction, reference: Optional[Direction]) -> Optional[float]:
    if reference is None:
        return None
    ex = direction.dx_bar - reference.dx_bar
    es = direction.ds_bar - reference.ds_bar
    return float(np.sqrt(ex @ ex + es @ es))


def _orthogonality(direction: Direction) -> float:
    dx, ds = direction.dx_bar, direction.ds_bar
    scale = float(np.linalg.norm(dx) * np.linalg.norm(ds))
    return 0.0 if scale == 0 else float(dx @ ds) / scale


def predictor_step(instance: HsdInstance, state: HsdState, backend: Backend, config: SolverConfig,
                   step: int = 0, tracker: Optional[_StoreTracker] = None):
    """Affine-scaling step (``gamma = 0``) damped to stay in ``N(beta_outer)``.

    Returns ``(new_state, delta, direction, row)``.
    """
    system, direction, reference, meta, kappa, frob, touched = _solve_direction(
        instance, state, 0, backend, step, tracker, config.corrects_residuals)
    delta0 = seed_step(state, direction)
    delta = find_step_length(state, direction, config.beta_outer)
    new_state = apply_step(state, direction, delta)
    check = central_path.proximity(new_state, config.beta_outer)
    row = TraceRow(
        t=step, gamma=0, mu=check.mu, tau=new_state.tau, theta=new_state.theta, delta=delta,
        proximity=check.proximity, kappa=kappa, frobenius=frob, cost_units=meta.cost_units,
        restoration_steps=0, residual_norm=residuals(instance, new_state).norm(),
        delta0=delta0, mu_before=system.mu, orthogonality=_orthogonality(direction),
        direction_error=_bars_error(direction, reference),
        touched_matrix_leaves=touched[0], touched_rhs_leaves=touched[1],
        backend_retries=meta.retries, backend_converged=meta.converged,
    )
    return new_state, delta, direction, row


def corrector_step(instance: HsdInstance, state: HsdState, backend: Backend, config: SolverConfig,
                   step: int = 0, tracker: Optional[_StoreTracker] = None):
    """Centering step (``gamma = 1``), restored into ``N(beta_inner)`` if needed.

    Returns ``(new_state, direction, row)``.
    """
    system, direction, reference, meta, kappa, frob, touched = _solve_direction(
        instance, state, 1, backend, step, tracker, config.corrects_residuals)
    new_state = apply_step(state, direction, 1.0)
    if not new_state.is_interior():
        raise RestorationError("corrector step left the positive orthant")

    eps_threshold = eps_actual = None
    if reference is not None:
        exact_state = apply_step(state, reference, 1.0)
        ex = direction.dx_bar - reference.dx_bar
        es = direction.ds_bar - reference.ds_bar
        scale = max(float(np.linalg.norm(ex)), float(np.linalg.norm(es)))
        eps_actual = scale
        if scale > 0:
            eps_threshold = epsilon_prime_threshold(exact_state.x_bar, exact_state.s_bar, ex / scale, es / scale)

    steps_taken, displacement = 0, 0.0
    if not central_path.in_neighborhood(new_state.x_bar, new_state.s_bar, config.beta_inner):
        outcome = central_path.restore(new_state, config.beta_inner, config.restoration_max_steps)
        new_state = outcome.state
        steps_taken, displacement = outcome.steps_taken, outcome.max_displacement
    check = central_path.proximity(new_state, config.beta_inner)
    row = TraceRow(
        t=step, gamma=1, mu=check.mu, tau=new_state.tau, theta=new_state.theta, delta=None,
        proximity=check.proximity, kappa=kappa, frobenius=frob, cost_units=meta.cost_units,
        restoration_steps=steps_taken, residual_norm=residuals(instance, new_state).norm(),
        mu_before=system.mu, orthogonality=_orthogonality(direction),
        direction_error=_bars_error(direction, reference),
        max_restoration_displacement=displacement,
        epsilon_prime_threshold=eps_threshold, epsilon_prime_actual=eps_actual,
        touched_matrix_leaves=touched[0], touched_rhs_leaves=touched[1],
        backend_retries=meta.retries, backend_converged=meta.converged,
    )
    return new_state, direction, row


Observer = Callable[[HsdState, Direction, HsdState, TraceRow], None]


def run(problem: LpProblem, config: SolverConfig = SolverConfig(), observer: Optional[Observer] = None) -> SolveReport:
    """Solve ``problem`` from the default embedded starting point.

    Failures in a backend, the step-length search or restoration are
    re-raised with the trace so far attached as ``exc.trace``.
    """
    original_n = problem.n
    std = standardize(problem)
    instance, state = embed(std)
    backend = config.make_backend()
    tracker = _StoreTracker(assemble(instance, state, 0), full_rhs=config.corrects_residuals)
    cap = config.iteration_cap(instance.n)
    trace: list[TraceRow] = []

    t = 0
    while True:
        termination = check_termination(instance, state, config)
        if termination is not Termination.CONTINUE or t >= cap:
            break
        try:
            if t % 2 == 0:
                new_state, _, direction, row = predictor_step(instance, state, backend, config, t, tracker)
            else:
                new_state, direction, row = corrector_step(instance, state, backend, config, t, tracker)
        except (BackendError, RestorationError, StepLengthError) as exc:
            exc.trace = trace
            raise
        trace.append(row)
        if observer is not None:
            observer(state, direction, new_state, row)
        state = new_state
        t += 1

    if termination is Termination.OPTIMAL:
        split = support_set(state, instance.problem.A)
        solution = recover(instance, project(instance, state, split), split, state, config.eps3)
    elif termination is Termination.TAU_COLLAPSE:
        solution = classify_infeasible(instance, state.x, state.y, state.s)
    else:
        tau = state.tau
        solution = LpSolution(
            x_star=state.x / tau, y_star=state.y / tau, s_star=state.s / tau,
            objective_primal=float(instance.problem.c @ state.x / tau),
            objective_dual=float(instance.problem.b @ state.y / tau),
            status=Status.NON_CONVERGED,
        )
    if instance.n != original_n:
        solution = LpSolution(
            x_star=solution.x_star[:original_n], y_star=solution.y_star,
            s_star=solution.s_star[:original_n], objective_primal=solution.objective_primal,
            objective_dual=solution.objective_dual, status=solution.status,
        )
    return SolveReport(status=solution.status, solution=solution, iterations=len(trace),
                       trace=trace, final_state=state, termination=termination)
