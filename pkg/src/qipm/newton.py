"""Newton system assembly and the exact-complementarity correction of directions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .central_path import mu as duality_measure
from .lp_model import HsdInstance, HsdState


@dataclass(frozen=True)
class BlockLayout:
    """Row/column offsets of the ``(y, x, tau, theta, s, k)`` blocks."""

    m: int
    n: int

    @property
    def y(self) -> slice:
        return slice(0, self.m)

    @property
    def x(self) -> slice:
        return slice(self.m, self.m + self.n)

    @property
    def tau(self) -> int:
        return self.m + self.n

    @property
    def theta(self) -> int:
        return self.m + self.n + 1

    @property
    def s(self) -> slice:
        return slice(self.m + self.n + 2, self.m + 2 * self.n + 2)

    @property
    def k(self) -> int:
        return self.m + 2 * self.n + 2

    @property
    def size(self) -> int:
        return self.m + 2 * self.n + 3

    @property
    def n_upper(self) -> int:
        """Rows of the data-only (state independent) part."""
        return self.m + self.n + 2

    def state_entries(self) -> list[tuple[int, int]]:
        """The ``2(n+1)`` matrix positions that depend on the iterate.

        Ordered as ``S`` diagonal, ``X`` diagonal, then ``k`` and ``tau``.
        """
        r0 = self.n_upper
        entries = [(r0 + i, self.m + i) for i in range(self.n)]
        entries += [(r0 + i, self.s.start + i) for i in range(self.n)]
        last = r0 + self.n
        entries += [(last, self.tau), (last, self.k)]
        return entries

    def rhs_entries(self) -> range:
        return range(self.n_upper, self.size)


@dataclass(frozen=True, eq=False)
class NewtonSystem:
    M: np.ndarray
    f: np.ndarray
    gamma: int
    mu: float
    block_layout: BlockLayout


@dataclass(frozen=True, eq=False)
class Direction:
    dy: np.ndarray
    dx: np.ndarray
    dtau: float
    dtheta: float
    ds: np.ndarray
    dk: float

    @classmethod
    def from_vector(cls, d: np.ndarray, m: int, n: int) -> "Direction":
        d = np.asarray(d, dtype=float)
        L = BlockLayout(m, n)
        if d.size != L.size:
            raise ValueError(f"direction length {d.size} does not match m={m}, n={n}")
        return cls(
            dy=d[L.y].copy(), dx=d[L.x].copy(), dtau=float(d[L.tau]),
            dtheta=float(d[L.theta]), ds=d[L.s].copy(), dk=float(d[L.k]),
        )

    @classmethod
    def zeros(cls, m: int, n: int) -> "Direction":
        return cls.from_vector(np.zeros(m + 2 * n + 3), m, n)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.dy, self.dx, [self.dtau, self.dtheta], self.ds, [self.dk]])

    @property
    def dx_bar(self) -> np.ndarray:
        return np.append(self.dx, self.dtau)

    @property
    def ds_bar(self) -> np.ndarray:
        return np.append(self.ds, self.dk)


def apply_step(state: HsdState, direction: Direction, delta: float = 1.0) -> HsdState:
    """``v + delta * d`` for every block of the iterate."""
    return HsdState(
        y=state.y + delta * direction.dy,
        x=state.x + delta * direction.dx,
        tau=state.tau + delta * direction.dtau,
        theta=state.theta + delta * direction.dtheta,
        s=state.s + delta * direction.ds,
        k=state.k + delta * direction.dk,
    )


def assemble(instance: HsdInstance, state: HsdState, gamma: int, correct_residuals: bool = False) -> NewtonSystem:
    """Build ``M d = f`` for the current iterate.

    With ``correct_residuals`` the four equality blocks of ``f`` carry the
    negated residuals of those rows at ``state`` instead of zeros, so a
    full step also removes drift left by inexact earlier directions. On
    exactly feasible iterates both versions coincide.

    Block rows, over columns ``(y, x, tau, theta, s, k)``::

        [  0     A    -b    b_bar  0   0 ]      [ 0 ]
        [ -A^T   0     c   -c_bar -I   0 ]      [ 0 ]
        [  b^T  -c^T   0    z_bar  0  -1 ]  =   [ 0 ]
        [ -b_bar^T c_bar^T -z_bar 0 0  0 ]      [ 0 ]
        [  0     S     0    0      X   0 ]      [ gamma mu 1 - X s ]
        [  0     0     k    0      0  tau]      [ gamma mu - tau k  ]
    """
    if gamma not in (0, 1):
        raise ValueError(f"gamma must be 0 or 1, got {gamma}")
    P = instance.problem
    m, n = P.m, P.n
    L = BlockLayout(m, n)
    M = np.zeros((L.size, L.size))

    M[L.y, L.x] = P.A
    M[L.y, L.tau] = -P.b
    M[L.y, L.theta] = instance.b_bar

    r = m
    rows = slice(r, r + n)
    M[rows, L.y] = -P.A.T
    M[rows, L.tau] = P.c
    M[rows, L.theta] = -instance.c_bar
    M[rows, L.s] = -np.eye(n)

    r = m + n
    M[r, L.y] = P.b
    M[r, L.x] = -P.c
    M[r, L.theta] = instance.z_bar
    M[r, L.k] = -1.0

    r = m + n + 1
    M[r, L.y] = -instance.b_bar
    M[r, L.x] = instance.c_bar
    M[r, L.tau] = -instance.z_bar

    r = L.n_upper
    idx = np.arange(n)
    M[r + idx, m + idx] = state.s
    M[r + idx, L.s.start + idx] = state.x
    M[r + n, L.tau] = state.k
    M[r + n, L.k] = state.tau

    mu = duality_measure(state)
    f = np.zeros(L.size)
    if correct_residuals:
        f[: L.n_upper] = -(M[: L.n_upper] @ state.to_vector())
        f[m + n + 1] -= instance.gap0
    f[r : r + n] = gamma * mu - state.x * state.s
    f[r + n] = gamma * mu - state.tau * state.k
    return NewtonSystem(M=M, f=f, gamma=gamma, mu=mu, block_layout=L)


def complementarity_shift(state: HsdState, direction: Direction, gamma: int, mu: float) -> Direction:
    """Force ``X ds + S dx = gamma mu 1 - X s`` (and its ``tau, k`` row) exactly.

    For each pair ``(x_i, s_i)`` the direction component multiplied by the
    larger of the two is re-solved from the linearized complementarity
    equation, so the correction is divided by ``max(|x_i|, |s_i|)``. Ties
    go to the ``x`` branch, which re-solves ``ds_i``.
    """
    target = gamma * mu
    x, s = state.x_bar, state.s_bar
    dx, ds = direction.dx_bar.copy(), direction.ds_bar.copy()
    rhs = target - x * s
    x_branch = np.abs(x) >= np.abs(s)
    ds[x_branch] = (rhs[x_branch] - s[x_branch] * dx[x_branch]) / x[x_branch]
    s_branch = ~x_branch
    dx[s_branch] = (rhs[s_branch] - x[s_branch] * ds[s_branch]) / s[s_branch]
    return Direction(
        dy=direction.dy.copy(), dx=dx[:-1], dtau=float(dx[-1]),
        dtheta=direction.dtheta, ds=ds[:-1], dk=float(ds[-1]),
    )


def complementarity_residual(state: HsdState, direction: Direction, gamma: int, mu: float) -> np.ndarray:
    """``X ds + S dx - (gamma mu 1 - X s)`` over the ``n + 1`` pairs."""
    x, s = state.x_bar, state.s_bar
    return x * direction.ds_bar + s * direction.dx_bar - (gamma * mu - x * s)
