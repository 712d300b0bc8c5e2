"""Random dense LPs that are feasible and bounded by construction."""

from __future__ import annotations

import math

import numpy as np

from .lp_model import LpProblem


def default_rows(n: int) -> int:
    return max(1, math.ceil(n / 2))


def random_feasible_instance(n: int, m: int | None = None, rng=None) -> LpProblem:
    """Plant a strictly complementary primal-dual pair and derive ``b`` and ``c``.

    ``m`` coordinates of ``x*`` are positive (the rest zero) and ``s*`` is
    positive exactly on the complement, so ``x*`` is optimal with value
    ``c^T x*``. ``A`` and ``y*`` are standard normal.
    """
    if m is None:
        m = default_rows(n)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(rng)
    A = rng.standard_normal((m, n))
    basis = rng.choice(n, size=m, replace=False)
    x_star = np.zeros(n)
    x_star[basis] = rng.uniform(0.5, 2.0, size=m)
    s_star = rng.uniform(0.5, 2.0, size=n)
    s_star[basis] = 0.0
    y_star = rng.standard_normal(m)
    return LpProblem(A=A, b=A @ x_star, c=A.T @ y_star + s_star)
