"""Weighted error norm and PID step-size controller.

The controller follows the limiter form

    dt_new = (1 + arctan(eps_{n+1}^(b1/p) * eps_n^(b2/p) * eps_{n-1}^(b3/p) - 1)) * dt,

with ``eps = 1/w`` the inverse of the weighted error estimate, as suggested
by Soederlind & Wang (2006), "Adaptive time-stepping and computational
stability".  A step is rejected when the limiter factor falls below the
safety threshold 0.9^2 = 0.81.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Tolerances",
    "ControllerState",
    "DegenerateWeightError",
    "weighted_error_norm",
    "propose_step",
    "initial_step_size",
]

#: Default PI gains (beta1, beta2, beta3); a PID with zero derivative gain.
DEFAULT_BETA = (0.60, -0.20, 0.0)

#: Error estimates below this are clipped before inversion to keep eps finite.
W_FLOOR = 1e-10

#: Reject a step when the limiter factor drops below 0.9**2.
ACCEPT_THRESHOLD = 0.81


class DegenerateWeightError(ValueError):
    """Raised when an error-norm weight denominator vanishes."""


@dataclass
class Tolerances:
    """Absolute/relative tolerance pair for the weighted error norm."""

    tau_a: float = 1e-6
    tau_r: float = 1e-6

    def __post_init__(self):
        if self.tau_a < 0 or self.tau_r < 0 or self.tau_a + self.tau_r <= 0:
            raise ValueError("tolerances must be nonnegative and not both zero")


@dataclass
class ControllerState:
    """Mutable controller state owned by a single integration run.

    ``eps_prev`` and ``eps_prev2`` hold the inverse error estimates of the
    last two accepted steps; both start at 1 so the first step reduces to an
    I controller.  ``p_ctrl`` is the order used in the gain exponents,
    ``min(p, p_hat + 1)`` for an embedded pair.
    """

    dt: float
    p_ctrl: int = 3
    beta: tuple[float, float, float] = DEFAULT_BETA
    eps_prev: float = 1.0
    eps_prev2: float = 1.0
    dt_min: float = 0.0
    dt_max: float = math.inf
    accept_threshold: float = ACCEPT_THRESHOLD
    w_floor: float = W_FLOOR


def weighted_error_norm(u: np.ndarray, u_hat: np.ndarray, tol: Tolerances) -> float:
    """Root-mean-square of the componentwise error scaled by tolerance weights.

    Returns ``sqrt(mean(((u - u_hat) / (tau_a + tau_r*max(|u|, |u_hat|)))^2))``.
    Raises :class:`DegenerateWeightError` when any weight denominator is zero.
    """
    u = np.asarray(u, dtype=float)
    u_hat = np.asarray(u_hat, dtype=float)
    if u.shape != u_hat.shape:
        raise ValueError("u and u_hat must have the same shape")
    scale = tol.tau_a + tol.tau_r * np.maximum(np.abs(u), np.abs(u_hat))
    if np.any(scale == 0.0):
        raise DegenerateWeightError("zero tolerance weight; increase tau_a or tau_r")
    return float(np.sqrt(np.mean(((u - u_hat) / scale) ** 2)))


def propose_step(
    state: ControllerState, w_new: float, p: int | None = None
) -> tuple[float, bool, float]:
    """Advance the controller by one error estimate.

    Computes the limiter factor from the current and two previous inverse
    error estimates, clamps the new step size to ``[dt_min, dt_max]`` and
    decides acceptance.  On accept the estimate history shifts; on reject it
    is left untouched so an identical retry is fully deterministic.  The
    state's ``dt`` is set to the returned step size in both cases (it is the
    retry step after a rejection).

    A non-finite ``w_new`` is treated as infinite error: the factor drops to
    its lower bound ``1 - pi/4`` and the step is rejected.
    """
    if p is None:
        p = state.p_ctrl
    if math.isfinite(w_new):
        if w_new < 0:
            raise ValueError("error norm must be nonnegative")
        eps_new = 1.0 / max(w_new, state.w_floor)
    else:
        eps_new = 0.0
    b1, b2, b3 = state.beta
    arg = eps_new ** (b1 / p) * state.eps_prev ** (b2 / p) * state.eps_prev2 ** (b3 / p)
    factor = 1.0 + math.atan(arg - 1.0)
    dt_new = min(max(factor * state.dt, state.dt_min), state.dt_max)
    accept = factor >= state.accept_threshold
    if accept:
        state.eps_prev2 = state.eps_prev
        state.eps_prev = eps_new
    state.dt = dt_new
    return dt_new, accept, factor


def initial_step_size(f, t0: float, u0: np.ndarray, p: int, tol: Tolerances):
    """Classical two-evaluation starting step heuristic.

    Compares the size of ``f(u0)`` against ``u0`` in tolerance-scaled norm,
    takes a trial Euler step and refines with the observed derivative change
    (Hairer, Noersett & Wanner, "Solving ODEs I", II.4).  Returns
    ``(dt0, f0)`` where ``f0 = f(t0, u0)`` can be reused as the first stage.
    Costs exactly two right-hand side evaluations.
    """
    u0 = np.asarray(u0, dtype=float)
    scale = tol.tau_a + tol.tau_r * np.abs(u0)
    f0 = f(t0, u0)
    d0 = float(np.sqrt(np.mean((u0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    f1 = f(t0 + h0, u0 + h0 * f0)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    max_d = max(d1, d2)
    if max_d <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max_d) ** (1.0 / p)
    return min(100 * h0, h1), f0
