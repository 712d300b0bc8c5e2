"""LP instances, standard-form conversion and the homogeneous self-dual embedding."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np


class ProblemError(ValueError):
    """Malformed LP data (shape mismatch, non-finite entries, bad form)."""


class Form(str, Enum):
    STANDARD_EQUALITY = "equality"
    INEQUALITY = "inequality"


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Dense LP ``min c^T x`` subject to ``Ax = b`` (or ``Ax >= b``), ``x >= 0``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    form: Form = Form.STANDARD_EQUALITY

    def __post_init__(self):
        A = np.array(self.A, dtype=float, copy=True)
        b = np.array(self.b, dtype=float, copy=True).reshape(-1)
        c = np.array(self.c, dtype=float, copy=True).reshape(-1)
        if A.ndim != 2:
            raise ProblemError(f"A must be two-dimensional, got shape {A.shape}")
        m, n = A.shape
        if m < 1 or n < 1:
            raise ProblemError(f"A must be at least 1x1, got {A.shape}")
        if b.size != m:
            raise ProblemError(f"b has length {b.size}, expected {m} (rows of A)")
        if c.size != n:
            raise ProblemError(f"c has length {c.size}, expected {n} (columns of A)")
        for name, arr in (("A", A), ("b", b), ("c", c)):
            if not np.all(np.isfinite(arr)):
                raise ProblemError(f"{name} contains NaN or Inf entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "form", Form(self.form))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True, eq=False)
class HsdState:
    """Interior iterate ``v = (y, x, tau, theta, s, k)`` of the embedded problem."""

    y: np.ndarray
    x: np.ndarray
    tau: float
    theta: float
    s: np.ndarray
    k: float

    @property
    def m(self) -> int:
        return self.y.size

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def x_bar(self) -> np.ndarray:
        return np.append(self.x, self.tau)

    @property
    def s_bar(self) -> np.ndarray:
        return np.append(self.s, self.k)

    def is_interior(self) -> bool:
        return bool(np.all(self.x > 0) and np.all(self.s > 0) and self.tau > 0 and self.k > 0)

    def to_vector(self) -> np.ndarray:
        """Stack in Newton-system order ``(y, x, tau, theta, s, k)``."""
        return np.concatenate([self.y, self.x, [self.tau, self.theta], self.s, [self.k]])

    @classmethod
    def from_vector(cls, v: np.ndarray, m: int, n: int) -> "HsdState":
        v = np.asarray(v, dtype=float)
        if v.size != m + 2 * n + 3:
            raise ValueError(f"vector length {v.size} does not match m={m}, n={n}")
        return cls(
            y=v[:m].copy(),
            x=v[m : m + n].copy(),
            tau=float(v[m + n]),
            theta=float(v[m + n + 1]),
            s=v[m + n + 2 : m + 2 * n + 2].copy(),
            k=float(v[m + 2 * n + 2]),
        )

    def with_bars(self, x_bar: np.ndarray, s_bar: np.ndarray) -> "HsdState":
        """Replace ``(x, tau)`` and ``(s, k)`` from their concatenated forms."""
        return replace(
            self,
            x=np.array(x_bar[:-1], dtype=float),
            tau=float(x_bar[-1]),
            s=np.array(s_bar[:-1], dtype=float),
            k=float(s_bar[-1]),
        )


@dataclass(frozen=True, eq=False)
class HsdInstance:
    """Embedded homogeneous self-dual problem built around a starting point."""

    problem: LpProblem
    b_bar: np.ndarray
    c_bar: np.ndarray
    z_bar: float
    x0: np.ndarray
    s0: np.ndarray
    y0: np.ndarray
    n_prime: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_prime", self.problem.m + 2 * self.problem.n + 3)

    @property
    def m(self) -> int:
        return self.problem.m

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def gap0(self) -> float:
        """``(x0)^T s0 + 1``, the right-hand side of the normalization row."""
        return float(self.x0 @ self.s0) + 1.0

    @property
    def infeasibility_norm(self) -> float:
        """``||(b_bar, c_bar)||`` used by the optimality stopping test."""
        return float(np.sqrt(self.b_bar @ self.b_bar + self.c_bar @ self.c_bar))


@dataclass(frozen=True, eq=False)
class Residuals:
    r1: np.ndarray
    r2: np.ndarray
    r3: float
    r4: float

    def norm(self) -> float:
        return float(np.sqrt(self.r1 @ self.r1 + self.r2 @ self.r2 + self.r3**2 + self.r4**2))


def standardize(problem: LpProblem) -> LpProblem:
    """Convert ``Ax >= b`` to ``[A | -I] (x, w) = b`` with zero-cost surplus ``w``.

    Problems already in equality form are returned unchanged.
    """
    if problem.form is Form.STANDARD_EQUALITY:
        return problem
    m, n = problem.A.shape
    A = np.hstack([problem.A, -np.eye(m)])
    c = np.concatenate([problem.c, np.zeros(m)])
    return LpProblem(A=A, b=problem.b, c=c, form=Form.STANDARD_EQUALITY)


def embed(
    problem: LpProblem,
    x0: Optional[np.ndarray] = None,
    s0: Optional[np.ndarray] = None,
    y0: Optional[np.ndarray] = None,
) -> tuple[HsdInstance, HsdState]:
    """Build the self-dual embedding and its feasible starting point.

    Defaults are ``x0 = s0 = 1`` and ``y0 = 0``; the returned state is
    ``(y0, x0, 1, 1, s0, 1)``.
    """
    if problem.form is not Form.STANDARD_EQUALITY:
        raise ProblemError("embed requires a standard equality-form problem; call standardize first")
    m, n = problem.m, problem.n
    x0 = np.ones(n) if x0 is None else np.array(x0, dtype=float).reshape(-1)
    s0 = np.ones(n) if s0 is None else np.array(s0, dtype=float).reshape(-1)
    y0 = np.zeros(m) if y0 is None else np.array(y0, dtype=float).reshape(-1)
    if x0.size != n or s0.size != n or y0.size != m:
        raise ProblemError("starting point dimensions do not match the problem")
    if np.any(x0 <= 0) or np.any(s0 <= 0):
        raise ProblemError("x0 and s0 must be strictly positive")

    A, b, c = problem.A, problem.b, problem.c
    b_bar = b - A @ x0
    c_bar = c - A.T @ y0 - s0
    z_bar = float(c @ x0 + 1.0 - b @ y0)
    instance = HsdInstance(problem=problem, b_bar=b_bar, c_bar=c_bar, z_bar=z_bar, x0=x0, s0=s0, y0=y0)
    state = HsdState(y=y0.copy(), x=x0.copy(), tau=1.0, theta=1.0, s=s0.copy(), k=1.0)
    return instance, state


def residuals(instance: HsdInstance, state: HsdState) -> Residuals:
    """Equality residuals of the embedded constraints at ``state``.

    ``r4`` is the normalization row written in its slack form
    ``(s0)^T x + (x0)^T s + tau + k - gap0*theta - gap0``.
    """
    A, b, c = instance.problem.A, instance.problem.b, instance.problem.c
    y, x, s = state.y, state.x, state.s
    tau, theta, k = state.tau, state.theta, state.k
    r1 = A @ x - b * tau + instance.b_bar * theta
    r2 = -A.T @ y + c * tau - instance.c_bar * theta - s
    r3 = float(b @ y - c @ x + instance.z_bar * theta - k)
    gap0 = instance.gap0
    r4 = float(instance.s0 @ x + instance.x0 @ s + tau + k - gap0 * theta - gap0)
    return Residuals(r1=r1, r2=r2, r3=r3, r4=r4)


def problem_from_dict(data: Mapping[str, Any]) -> LpProblem:
    """Validate and build a problem from ``{"A", "b", "c", "form"}``."""
    missing = [key for key in ("A", "b", "c") if key not in data]
    if missing:
        raise ProblemError(f"missing keys: {', '.join(missing)}")
    rows = data["A"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ProblemError("A must be a non-empty list of rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ProblemError(f"A is not rectangular (row lengths {sorted(widths)})")
    form = data.get("form", "equality")
    try:
        form = Form(form)
    except ValueError:
        raise ProblemError(f"unknown form {form!r}; expected 'equality' or 'inequality'") from None
    try:
        return LpProblem(A=np.array(rows, dtype=float), b=np.array(data["b"], dtype=float),
                         c=np.array(data["c"], dtype=float), form=form)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProblemError):
            raise
        raise ProblemError(f"non-numeric problem data: {exc}") from exc


def problem_to_dict(problem: LpProblem) -> dict:
    return {
        "A": problem.A.tolist(),
        "b": problem.b.tolist(),
        "c": problem.c.tolist(),
        "form": problem.form.value,
    }


def load_problem(path: str | Path) -> LpProblem:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ProblemError(f"{path}: top-level JSON value must be an object")
    return problem_from_dict(data)
