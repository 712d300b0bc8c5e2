"""Duality-gap measure, central-path neighborhoods and neighborhood restoration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp_model import HsdState


class RestorationError(RuntimeError):
    """Gradient restoration did not reach the neighborhood within the step budget."""

    def __init__(self, message, outcome=None):
        super().__init__(message)
        self.outcome = outcome


@dataclass(frozen=True)
class NeighborhoodCheck:
    mu: float
    proximity: float
    beta: float
    inside: bool


@dataclass(frozen=True, eq=False)
class RestorationOutcome:
    state: HsdState
    steps_taken: int
    final_g: float
    epsilon_double_prime_used: float
    # Largest Euclidean length of a single restoration step.
    max_displacement: float = 0.0


# Aim a hair inside the boundary so the first-order iteration crosses g = 0
# instead of creeping toward it from above.
_TARGET_MARGIN = 1e-9


def mu(state: HsdState) -> float:
    """Average complementarity ``(x^T s + tau k) / (n + 1)``."""
    return (float(state.x @ state.s) + state.tau * state.k) / (state.n + 1)


def proximity(state: HsdState, beta: float) -> NeighborhoodCheck:
    """Distance of ``(Xs; tau k)`` from ``mu 1`` and membership in ``N(beta)``."""
    products = state.x_bar * state.s_bar
    m = float(products.mean())
    dist = float(np.linalg.norm(products - m))
    return NeighborhoodCheck(mu=m, proximity=dist, beta=beta, inside=bool(dist <= beta * m))


def in_neighborhood(x_bar: np.ndarray, s_bar: np.ndarray, beta: float) -> bool:
    """Positivity plus the ``N(beta)`` proximity test on concatenated vectors."""
    if not (np.all(x_bar > 0) and np.all(s_bar > 0)):
        return False
    products = x_bar * s_bar
    m = products.mean()
    return bool(m > 0 and np.linalg.norm(products - m) <= beta * m)


def g_eval(x_bar: np.ndarray, s_bar: np.ndarray, beta: float):
    """Neighborhood functional ``g = ||Xs - mu 1||^2 - beta^2 mu^2`` and its gradient.

    Written as ``sum (x_i s_i)^2 - B (sum x_i s_i)^2`` with
    ``B = (beta^2 + (n+1)) / (n+1)^2``; ``g <= 0`` exactly on ``N(beta)``.

    Returns
    -------
    g : float
    grad_x, grad_s : ndarray
        Partial derivatives with respect to ``x_bar`` and ``s_bar``.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    s_bar = np.asarray(s_bar, dtype=float)
    if x_bar.shape != s_bar.shape or x_bar.ndim != 1:
        raise ValueError(f"x_bar and s_bar must be 1-D of equal length, got {x_bar.shape} and {s_bar.shape}")
    size = x_bar.size
    B = (beta**2 + size) / size**2
    products = x_bar * s_bar
    total = products.sum()
    g = float(products @ products - B * total**2)
    centered = products - B * total
    grad_x = 2.0 * s_bar * centered
    grad_s = 2.0 * x_bar * centered
    return g, grad_x, grad_s


def _first_order_decrease(x_bar, s_bar, B):
    # Bracketed term of the first-order expansion of g along -grad g;
    # equals ||grad g||^2 / 4.
    products = x_bar * s_bar
    centered = products - B * products.sum()
    return float(((x_bar**2 + s_bar**2) * centered**2).sum())


def restore(state: HsdState, beta: float, max_steps: int = 20) -> RestorationOutcome:
    """Push ``state`` back into ``N(beta)`` by gradient steps on ``g``.

    Each step uses the first-order zero-crossing length ``g / (4 D)``,
    halved as often as needed to keep every coordinate positive. Only
    ``(x, tau)`` and ``(s, k)`` move; the affine constraints are not
    re-projected.

    Raises
    ------
    RestorationError
        If ``g > 0`` after ``max_steps`` steps or the input is not interior.
    """
    if not state.is_interior():
        raise RestorationError("restoration requires an interior state")
    x_bar, s_bar = state.x_bar, state.s_bar
    size = x_bar.size
    B = (beta**2 + size) / size**2
    g, grad_x, grad_s = g_eval(x_bar, s_bar, beta)
    steps = 0
    eps_used = 0.0
    max_disp = 0.0
    while g > 0 and steps < max_steps:
        m = float((x_bar * s_bar).mean())
        target = -_TARGET_MARGIN * (beta * m) ** 2
        D = _first_order_decrease(x_bar, s_bar, B)
        if D <= 0:
            break
        eps = (g - target) / (4.0 * D)
        while True:
            new_x = x_bar - eps * grad_x
            new_s = s_bar - eps * grad_s
            if np.all(new_x > 0) and np.all(new_s > 0):
                break
            eps *= 0.5
            if eps == 0.0:
                raise RestorationError("positivity guard collapsed the step length")
        max_disp = max(max_disp, float(eps * np.sqrt(grad_x @ grad_x + grad_s @ grad_s)))
        x_bar, s_bar = new_x, new_s
        eps_used = eps
        steps += 1
        g, grad_x, grad_s = g_eval(x_bar, s_bar, beta)

    outcome = RestorationOutcome(
        state=state.with_bars(x_bar, s_bar) if steps else state,
        steps_taken=steps,
        final_g=g,
        epsilon_double_prime_used=eps_used,
        max_displacement=max_disp,
    )
    if g > 0:
        raise RestorationError(f"g = {g:.3e} > 0 after {steps} restoration steps", outcome)
    return outcome
