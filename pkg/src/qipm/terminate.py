"""Optimal-face projection and recovery of primal/dual solutions from the final iterate."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .lp_model import HsdInstance, HsdState
from .solvers import solve_exact


class Status(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    INFEASIBLE_OR_UNBOUNDED = "InfeasibleOrUnbounded"
    NON_CONVERGED = "NonConverged"


INFEASIBLE_STATUSES = frozenset({
    Status.PRIMAL_INFEASIBLE, Status.DUAL_INFEASIBLE, Status.INFEASIBLE_OR_UNBOUNDED,
})

_REGULARIZATION = 1e-12


@dataclass(frozen=True, eq=False)
class SupportSplit:
    zeta: np.ndarray
    complement: np.ndarray
    B_cols: np.ndarray
    C_cols: np.ndarray


@dataclass(frozen=True, eq=False)
class ProjectedPoint:
    """Projection output. ``tau`` is 0 in the ``k``-dominant case."""

    y: np.ndarray
    x_B: np.ndarray
    tau: float
    k: float
    case: int
    constraint_residual: float


@dataclass(frozen=True, eq=False)
class LpSolution:
    x_star: np.ndarray
    y_star: np.ndarray
    s_star: np.ndarray
    objective_primal: float
    objective_dual: float
    status: Status


def support_set(state: HsdState, A: Optional[np.ndarray] = None) -> SupportSplit:
    """Indices with ``x_j >= s_j`` (ties included) and the matching columns of ``A``."""
    mask = state.x >= state.s
    zeta = np.flatnonzero(mask)
    complement = np.flatnonzero(~mask)
    if A is None:
        A = np.zeros((0, state.n))
    return SupportSplit(zeta=zeta, complement=complement, B_cols=A[:, zeta], C_cols=A[:, complement])


def _constraints(instance: HsdInstance, split: SupportSplit, case: int) -> np.ndarray:
    A, b, c = instance.problem.A, instance.problem.b, instance.problem.c
    B = A[:, split.zeta]
    c_B = c[split.zeta]
    m, nb = B.shape
    # Variables are (y, x_B, last) where last is tau (case 1) or k (case 2).
    C = np.zeros((m + nb + 1, m + nb + 1))
    C[:m, m : m + nb] = B
    C[m : m + nb, :m] = -B.T
    C[m + nb, :m] = b
    C[m + nb, m : m + nb] = -c_B
    if case == 1:
        C[:m, -1] = -b
        C[m : m + nb, -1] = c_B
    else:
        C[m + nb, -1] = -1.0
    return C


def _nearest_in_nullspace(C: np.ndarray, p0: np.ndarray):
    # Stationarity of ||p - p0||^2 / 2 + lambda^T C p as a saddle-point system;
    # the small negative block picks the minimum-norm multiplier when C is
    # rank deficient.
    nv, nc = C.shape[1], C.shape[0]
    K = np.zeros((nv + nc, nv + nc))
    K[:nv, :nv] = np.eye(nv)
    K[:nv, nv:] = C.T
    K[nv:, :nv] = C
    K[nv:, nv:] = -_REGULARIZATION * np.eye(nc)
    sol, _ = solve_exact(K, np.concatenate([p0, np.zeros(nc)]))
    p = sol[:nv]
    residual = float(np.linalg.norm(C @ p))
    if residual > 1e-10 * (1.0 + np.linalg.norm(p)):
        # Badly scaled multipliers; project with a pseudo-inverse instead.
        correction, *_ = np.linalg.lstsq(C, C @ p0, rcond=None)
        p = p0 - correction
        residual = float(np.linalg.norm(C @ p))
    return p, residual


def project(instance: HsdInstance, state: HsdState, split: SupportSplit) -> ProjectedPoint:
    """Closest point to the iterate on the face selected by ``split``.

    With ``tau >= k`` the free variables are ``(y, x_B, tau)`` subject to
    ``B x_B = b tau``, ``B^T y = c_B tau`` and ``b^T y = c_B^T x_B``.
    Otherwise they are ``(y, x_B, k)`` with ``B x_B = 0``, ``B^T y = 0``
    and ``b^T y - c_B^T x_B = k``.
    """
    case = 1 if state.tau >= state.k else 2
    C = _constraints(instance, split, case)
    last = state.tau if case == 1 else state.k
    p0 = np.concatenate([state.y, state.x[split.zeta], [last]])
    p, residual = _nearest_in_nullspace(C, p0)
    m, nb = instance.m, split.zeta.size
    y, x_B = p[:m], p[m : m + nb]
    if case == 1:
        return ProjectedPoint(y=y, x_B=x_B, tau=float(p[-1]), k=0.0, case=1, constraint_residual=residual)
    return ProjectedPoint(y=y, x_B=x_B, tau=0.0, k=float(p[-1]), case=2, constraint_residual=residual)


def recover(instance: HsdInstance, projected: ProjectedPoint, split: SupportSplit,
            state: HsdState, eps3: float = 1e-8) -> LpSolution:
    """Turn a projected point into an LP solution or an infeasibility verdict."""
    A, b, c = instance.problem.A, instance.problem.b, instance.problem.c
    n = instance.n
    tau = projected.tau
    if tau > eps3:
        x = np.zeros(n)
        x[split.zeta] = projected.x_B / tau
        y = projected.y / tau
        s = np.zeros(n)
        s[split.complement] = state.s[split.complement] / tau
        return LpSolution(x_star=x, y_star=y, s_star=s, objective_primal=float(c @ x),
                          objective_dual=float(b @ y), status=Status.OPTIMAL)
    x = np.zeros(n)
    x[split.zeta] = projected.x_B
    s = np.zeros(n)
    s[split.complement] = state.s[split.complement]
    return classify_infeasible(instance, x, projected.y, s)


def classify_infeasible(instance: HsdInstance, x, y, s) -> LpSolution:
    """Read an infeasibility verdict off an unnormalized ray ``(x, y)``.

    ``-b^T y < 0`` certifies an infeasible primal; ``c^T x < 0`` an
    infeasible dual. The primal test is reported when both hold.
    """
    b, c = instance.problem.b, instance.problem.c
    primal_value = float(c @ x)
    dual_value = float(b @ y)
    if -dual_value < 0:
        status = Status.PRIMAL_INFEASIBLE
    elif primal_value < 0:
        status = Status.DUAL_INFEASIBLE
    else:
        status = Status.INFEASIBLE_OR_UNBOUNDED
    return LpSolution(x_star=np.asarray(x, dtype=float), y_star=np.asarray(y, dtype=float),
                      s_star=np.asarray(s, dtype=float), objective_primal=primal_value,
                      objective_dual=dual_value, status=status)
