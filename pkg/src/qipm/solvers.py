"""Linear-system backends for the Newton system ``M d = f``.

All backends return ``(d, SolveMeta)``. ``Backend`` binds one of them to a
configuration and derives per-step seeds so a whole run is reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from . import qlsa_sim
from .diagnostics import condition_number, frobenius_norm


class BackendError(RuntimeError):
    """A backend could not produce a usable direction."""


class SingularSystemError(BackendError):
    pass


class FidelityError(BackendError):
    """Every tomography attempt failed the fidelity test."""


class BackendId(str, Enum):
    EXACT = "exact"
    CG = "cg"
    QLSA = "qlsa"


@dataclass(frozen=True, eq=False)
class SolveMeta:
    backend_id: BackendId
    residual_norm: float
    kappa_estimate: Optional[float]
    frobenius_norm: float
    cost_units: float
    retries: int = 0
    converged: bool = True
    iterations: int = 0
    # Exact solution, kept by the simulator for error diagnostics only.
    reference: Optional[np.ndarray] = None


def _check_system(M, f):
    M = np.asarray(M, dtype=float)
    f = np.asarray(f, dtype=float).reshape(-1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"M must be square, got shape {M.shape}")
    if f.size != M.shape[0]:
        raise ValueError(f"f has length {f.size}, expected {M.shape[0]}")
    return M, f


def _lu_solve(M, f):
    # A zero pivot is reported as SingularSystemError below, not as a warning.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() == 0.0:
        raise SingularSystemError("matrix is singular to working precision")
    d = scipy.linalg.lu_solve((lu, piv), f)
    if not np.all(np.isfinite(d)):
        raise SingularSystemError("factorization produced non-finite entries")
    return d


def solve_exact(M, f):
    """Dense LU with partial pivoting."""
    M, f = _check_system(M, f)
    d = _lu_solve(M, f)
    size = M.shape[0]
    meta = SolveMeta(
        backend_id=BackendId.EXACT,
        residual_norm=float(np.linalg.norm(M @ d - f)),
        kappa_estimate=None,
        frobenius_norm=frobenius_norm(M),
        cost_units=2.0 / 3.0 * size**3,
    )
    return d, meta


def solve_cg(M, f, tol: float = 1e-10, max_iters: Optional[int] = None):
    """Conjugate gradient on the normal equations ``M^T M d = M^T f``.

    Stops once ``||M d - f|| <= tol ||f||``. Running out of iterations is
    reported through ``meta.converged`` rather than raised.
    """
    M, f = _check_system(M, f)
    size = M.shape[0]
    if max_iters is None:
        max_iters = 20 * size
    f_norm = float(np.linalg.norm(f))
    d = np.zeros(size)
    residual = f.copy()
    iterations = 0
    converged = f_norm == 0.0
    if not converged:
        z = M.T @ residual
        p = z.copy()
        zz = float(z @ z)
        while iterations < max_iters:
            Mp = M @ p
            denom = float(Mp @ Mp)
            if denom == 0.0:
                break
            alpha = zz / denom
            d += alpha * p
            residual -= alpha * Mp
            iterations += 1
            if np.linalg.norm(residual) <= tol * f_norm:
                converged = True
                break
            z = M.T @ residual
            zz_new = float(z @ z)
            if zz_new == 0.0:
                break
            p = z + (zz_new / zz) * p
            zz = zz_new
    meta = SolveMeta(
        backend_id=BackendId.CG,
        residual_norm=float(np.linalg.norm(M @ d - f)),
        kappa_estimate=None,
        frobenius_norm=frobenius_norm(M),
        cost_units=float(2 * iterations * size * size),
        converged=converged,
        iterations=iterations,
    )
    return d, meta


def symmetrize(M, f):
    """Hermitian dilation ``[[0, M], [M^T, 0]]`` with right-hand side ``(f, 0)``.

    Its solution is ``(0, M^{-1} f)``.
    """
    size = M.shape[0]
    H = np.zeros((2 * size, 2 * size))
    H[:size, size:] = M
    H[size:, :size] = M.T
    return H, np.concatenate([f, np.zeros(size)])


def solve_qlsa_sim(M, f, epsilon: float, rng_seed, retry_c: int = 4, kappa: Optional[float] = None):
    """Simulated quantum solve: exact direction degraded by tomography and norm noise.

    Steps: dilate to a symmetric system; solve it exactly as the stand-in
    for the prepared state; read it out with ``tomography`` until
    ``fidelity_check`` passes (at most ``retry_c`` attempts); pick an
    arbitrary global sign as a physical readout would; scale by a noisy
    norm estimate; then fix the sign by comparing one row of ``M d`` with
    ``f``.

    Parameters
    ----------
    kappa : float, optional
        Condition number of ``M`` if already known; saves an SVD.

    Raises
    ------
    FidelityError
        If all ``retry_c`` attempts fail the fidelity test.
    """
    M, f = _check_system(M, f)
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    size = M.shape[0]
    f_norm = float(np.linalg.norm(f))
    if f_norm == 0.0:
        zero = np.zeros(size)
        meta = SolveMeta(BackendId.QLSA, 0.0, kappa, frobenius_norm(M), 0.0, reference=zero)
        return zero, meta

    # The prepared state only sees f / ||f||; scaling also guards against underflow.
    H, rhs = symmetrize(M, f / f_norm)
    n_prime = H.shape[0]
    exact = _lu_solve(H, rhs)
    exact_norm = float(np.linalg.norm(exact))
    exact_unit = exact / exact_norm

    seq = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    tomo_seq, phase_seq, norm_seq = seq.spawn(3)
    attempt_seeds = tomo_seq.spawn(retry_c)
    outcome = None
    attempts = 0
    for child in attempt_seeds:
        attempts += 1
        candidate = qlsa_sim.tomography(exact_unit, epsilon, child)
        if np.any(candidate.estimate) and qlsa_sim.fidelity_check(candidate.estimate, exact_unit, epsilon):
            outcome = candidate
            break
    if outcome is None:
        raise FidelityError(f"tomography failed the fidelity test {retry_c} times")

    unit = outcome.estimate[size:]
    if not np.any(unit):
        raise FidelityError("tomography readout lost the solution block")
    unit = unit / np.linalg.norm(unit)
    # Global phase is unobservable; the readout may come back negated.
    if np.random.default_rng(phase_seq).random() < 0.5:
        unit = -unit
    d = f_norm * qlsa_sim.norm_estimate(exact_norm, epsilon, norm_seq) * unit
    row = int(np.argmax(np.abs(f)))
    if np.sign(M[row] @ d) != np.sign(f[row]):
        d = -d

    if kappa is None:
        kappa = condition_number(M)
    # The dilation has the same singular values as M, so kappa carries over.
    # Cost assumes H rescaled to unit spectral norm.
    spectral = float(np.linalg.norm(M, 2))
    cost = qlsa_sim.qlsa_cost(frobenius_norm(H) / spectral, kappa, epsilon, n_prime)
    cost_units = attempts * 2 * outcome.copies_used * cost.prepare_cost + cost.norm_cost
    meta = SolveMeta(
        backend_id=BackendId.QLSA,
        residual_norm=float(np.linalg.norm(M @ d - f)),
        kappa_estimate=float(kappa),
        frobenius_norm=frobenius_norm(M),
        cost_units=float(cost_units),
        retries=attempts - 1,
        reference=f_norm * exact[size:],
    )
    return d, meta


@dataclass(frozen=True)
class Backend:
    """A backend bound to its settings; ``solve(M, f, step)`` is deterministic."""

    kind: BackendId = BackendId.EXACT
    epsilon: float = 0.05
    seed: int = 0
    retry_c: int = 4
    cg_tol: float = 1e-10
    cg_max_iters: Optional[int] = None
    # Fall back to LU when CG does not converge.
    cg_fallback: bool = True

    def solve(self, M, f, step: int = 0, kappa: Optional[float] = None):
        kind = BackendId(self.kind)
        if kind is BackendId.EXACT:
            return solve_exact(M, f)
        if kind is BackendId.CG:
            d, meta = solve_cg(M, f, tol=self.cg_tol, max_iters=self.cg_max_iters)
            if meta.converged or not self.cg_fallback:
                return d, meta
            d_exact, meta_exact = solve_exact(M, f)
            return d_exact, SolveMeta(
                backend_id=BackendId.CG,
                residual_norm=meta_exact.residual_norm,
                kappa_estimate=None,
                frobenius_norm=meta.frobenius_norm,
                cost_units=meta.cost_units + meta_exact.cost_units,
                converged=False,
                iterations=meta.iterations,
            )
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(step,))
        return solve_qlsa_sim(M, f, self.epsilon, seq, retry_c=self.retry_c, kappa=kappa)
