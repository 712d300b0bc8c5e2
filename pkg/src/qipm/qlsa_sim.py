"""Classical stand-in for a quantum linear-system solve: tomography readout,
multiplicative norm estimation, the fidelity acceptance test and cost units.

Only the externally visible behavior is modeled. The caller supplies the
exact normalized solution; this module turns it into what a measurement
process would return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Keeps the multinomial draws inside int64 when epsilon is tiny.
MAX_COPIES = 10**15

SIGN_THRESHOLD = 0.4


@dataclass(frozen=True, eq=False)
class TomographyOutcome:
    estimate: np.ndarray
    copies_used: int
    sign_flips_vs_truth: int
    seed: object


@dataclass(frozen=True)
class QlsaCost:
    frobenius: float
    kappa: float
    epsilon: float
    n_prime: int
    prepare_cost: float
    norm_cost: float


def copies_needed(n_prime: int, epsilon: float) -> int:
    """``ceil(36 n' ln n' / eps^2)``, at least one and at most ``MAX_COPIES``."""
    if n_prime < 2:
        return 1
    raw = 36.0 * n_prime * math.log(n_prime) / epsilon**2
    return int(min(max(math.ceil(raw), 1), MAX_COPIES))


def tomography(d_true, epsilon: float, rng_seed) -> TomographyOutcome:
    """Estimate the unit vector ``d_true`` from simulated measurement counts.

    Amplitudes come from a multinomial draw over ``d_i^2``. Signs come
    from a second, independent batch of ``N`` samples over pairs ``(b, i)``
    with probabilities ``(d_i + sqrt(p_i))^2 / 4`` for ``b = 0`` and
    ``(d_i - sqrt(p_i))^2 / 4`` for ``b = 1``; coordinate ``i`` is positive
    when the ``(0, i)`` count exceeds ``0.4 p_i N``.

    Parameters
    ----------
    d_true : array_like
        Unit vector (norm 1 to 1e-12).
    epsilon : float
        Target precision in ``(0, 1)``.
    rng_seed : int, SeedSequence or Generator
        Source of randomness; the two sampling batches use separate child
        streams.

    Returns
    -------
    TomographyOutcome
    """
    d = np.asarray(d_true, dtype=float).reshape(-1)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ValueError(f"tomography expects a unit vector, got norm {np.linalg.norm(d)!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    ss = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    amp_rng, sign_rng = (np.random.default_rng(child) for child in ss.spawn(2))

    n_prime = d.size
    N = copies_needed(n_prime, epsilon)
    probs = d * d
    probs = probs / probs.sum()
    counts = amp_rng.multinomial(N, probs)
    p = counts / N
    root_p = np.sqrt(p)

    plus = (d + root_p) ** 2 / 4.0
    minus = (d - root_p) ** 2 / 4.0
    joint = np.concatenate([plus, minus])
    joint = joint / joint.sum()
    sign_counts = sign_rng.multinomial(N, joint)
    zero_counts = sign_counts[:n_prime]
    sigma = np.where(zero_counts > SIGN_THRESHOLD * p * N, 1.0, -1.0)

    estimate = np.where(counts > 0, sigma * root_p, 0.0)
    resolved = (counts > 0) & (d != 0)
    flips = int(np.count_nonzero(resolved & (np.sign(estimate) != np.sign(d))))
    return TomographyOutcome(estimate=estimate, copies_used=N, sign_flips_vs_truth=flips, seed=rng_seed)


def norm_estimate(true_norm: float, epsilon: float, rng_seed) -> float:
    """``true_norm * (1 + u)`` with ``u`` uniform on ``[-epsilon, epsilon]``."""
    if true_norm <= 0:
        raise ValueError("true_norm must be positive")
    if epsilon == 0:
        return float(true_norm)
    rng = np.random.default_rng(rng_seed)
    return float(true_norm * (1.0 + rng.uniform(-epsilon, epsilon)))


def fidelity_check(candidate, exact, epsilon: float) -> bool:
    """Whether the normalized vectors are within ``sqrt(7) * epsilon`` (inclusive)."""
    a = np.asarray(candidate, dtype=float).reshape(-1)
    b = np.asarray(exact, dtype=float).reshape(-1)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("fidelity_check needs nonzero vectors")
    return bool(np.linalg.norm(a / na - b / nb) <= math.sqrt(7.0) * epsilon)


def qlsa_cost(frobenius: float, kappa: float, epsilon: float, n_prime: int) -> QlsaCost:
    """Cost units for preparing the solution state once and for estimating its norm.

    ``prepare = (frobenius + log2 n') * kappa * log2(n' / epsilon)`` and
    ``norm = prepare / epsilon``.
    """
    for name, value in (("frobenius", frobenius), ("kappa", kappa), ("epsilon", epsilon), ("n_prime", n_prime)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    prepare = (frobenius + math.log2(n_prime)) * kappa * math.log2(n_prime / epsilon)
    return QlsaCost(
        frobenius=float(frobenius), kappa=float(kappa), epsilon=float(epsilon), n_prime=int(n_prime),
        prepare_cost=float(prepare), norm_cost=float(prepare / epsilon),
    )
