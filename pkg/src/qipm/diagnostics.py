"""Matrix analytics for traces: condition number, norms, corrector error threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MatrixStats:
    kappa: float
    frobenius: float
    spectral: float
    dims: tuple[int, int]


def condition_number(M: np.ndarray) -> float:
    """``sigma_max / sigma_min`` from a full SVD; ``inf`` for singular input."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"condition_number expects a square matrix, got shape {M.shape}")
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return float("inf")
    # Below working precision relative to sigma_max counts as singular.
    if sv[-1] <= sv[0] * M.shape[0] * np.finfo(float).eps:
        return float("inf")
    return float(sv[0] / sv[-1])


def frobenius_norm(M: np.ndarray) -> float:
    M = np.asarray(M, dtype=float)
    return float(np.sqrt(np.sum(M * M)))


def matrix_stats(M: np.ndarray) -> MatrixStats:
    M = np.asarray(M, dtype=float)
    sv = np.linalg.svd(M, compute_uv=False)
    spectral = float(sv[0]) if sv.size else 0.0
    if M.shape[0] == M.shape[1]:
        kappa = condition_number(M)
    else:
        kappa = float("inf") if sv[-1] == 0 else float(sv[0] / sv[-1])
    return MatrixStats(kappa=kappa, frobenius=frobenius_norm(M), spectral=spectral, dims=M.shape)


def epsilon_prime_threshold(x0, s0, x1, s1) -> float:
    """Largest corrector error that still keeps the step inside ``N(1/4)``.

    ``x0, s0`` are the exact corrector output (``x`` with ``tau`` appended,
    ``s`` with ``k`` appended); ``x1, s1`` the error directions, so the
    computed point is ``x0 + eps' x1``. First-order bound::

        ((2 - sqrt 2) / 8) x0^T s0 / (n+1)
        ----------------------------------------------------------------------
        sqrt(||X1 s0||^2 - (x1^T s0)^2/(n+1)) + sqrt(||X0 s1||^2 - (x0^T s1)^2/(n+1))
            - (x1^T s0 + x0^T s1) / (4 (n+1))

    A non-positive denominator places no constraint and returns ``inf``.
    """
    x0, s0, x1, s1 = (np.asarray(v, dtype=float) for v in (x0, s0, x1, s1))
    size = x0.size
    numerator = (2.0 - np.sqrt(2.0)) / 8.0 * float(x0 @ s0) / size
    spread_1 = float((x1 * s0) @ (x1 * s0)) - float(x1 @ s0) ** 2 / size
    spread_2 = float((x0 * s1) @ (x0 * s1)) - float(x0 @ s1) ** 2 / size
    # Both spreads are >= 0 by Cauchy-Schwarz; clip rounding noise.
    denominator = (
        np.sqrt(max(spread_1, 0.0))
        + np.sqrt(max(spread_2, 0.0))
        - (float(x1 @ s0) + float(x0 @ s1)) / (4.0 * size)
    )
    if denominator <= 0:
        return float("inf")
    return float(numerator / denominator)
