"""Low-dimensional oscillator-type test problems with conserved entropies.

The time-dependent oscillator is stored in autonomous form: a clock
component with unit derivative is appended to the state, so the tableaux's
row-sum convention applies unchanged and the entropy simply ignores the
clock.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import Problem

__all__ = [
    "harmonic_oscillator",
    "nonlinear_oscillator",
    "nonlinear_pendulum",
    "bounded_time_dependent_oscillator",
    "conserved_exponential_entropy",
    "pendulum_reference",
]


def harmonic_oscillator() -> Problem:
    """Unit-speed rotation; entropy is the squared Euclidean norm."""

    def rhs(t, u):
        return np.array([-u[1], u[0]])

    return Problem(
        name="harmonic_oscillator",
        dim=2,
        rhs=rhs,
        eta=lambda u: float(u[0] ** 2 + u[1] ** 2),
        eta_grad=lambda u: 2.0 * u,
        u0=np.array([1.0, 0.0]),
        exact=lambda t: np.array([math.cos(t), math.sin(t)]),
    )


def nonlinear_oscillator() -> Problem:
    """Rotation with state-dependent speed 1/|u|^2; same exact solution and
    entropy as the harmonic oscillator, but a genuinely nonlinear rhs."""

    def rhs(t, u):
        r2 = u[0] ** 2 + u[1] ** 2
        if r2 == 0.0:
            raise ValueError("nonlinear oscillator rhs is singular at u = 0")
        return np.array([-u[1], u[0]]) / r2

    return Problem(
        name="nonlinear_oscillator",
        dim=2,
        rhs=rhs,
        eta=lambda u: float(u[0] ** 2 + u[1] ** 2),
        eta_grad=lambda u: 2.0 * u,
        u0=np.array([1.0, 0.0]),
        exact=lambda t: np.array([math.cos(t), math.sin(t)]),
    )


@lru_cache(maxsize=256)
def _pendulum_rk4(t_final: float, u10: float, u20: float, n_steps: int):
    # scalar fixed-step RK4; plain floats keep the tight loop fast
    h = t_final / n_steps
    u1, u2 = u10, u20
    sin = math.sin
    for _ in range(n_steps):
        a1 = -sin(u2)
        b1 = u1
        a2 = -sin(u2 + 0.5 * h * b1)
        b2 = u1 + 0.5 * h * a1
        a3 = -sin(u2 + 0.5 * h * b2)
        b3 = u1 + 0.5 * h * a2
        a4 = -sin(u2 + h * b3)
        b4 = u1 + h * a3
        u1 += h * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0
        u2 += h * (b1 + 2 * b2 + 2 * b3 + b4) / 6.0
    return u1, u2


def pendulum_reference(t: float, u0=(1.5, 0.0), dt: float | None = None) -> np.ndarray:
    """Fixed-step RK4 reference for the pendulum.

    The default step keeps the fourth-order error near 1e-11 over horizons
    up to a few hundred time units; self-consistency under step halving is
    exercised in the test suite.
    """
    if t == 0.0:
        return np.array(u0, dtype=float)
    if dt is None:
        dt = 5e-4
    n = max(1, math.ceil(abs(t) / dt))
    return np.array(_pendulum_rk4(float(t), float(u0[0]), float(u0[1]), n))


def nonlinear_pendulum(u0=(1.5, 0.0)) -> Problem:
    """Idealized pendulum (momentum, angle); the energy u1^2/2 - cos(u2) is
    conserved.  No closed-form solution is used; errors are measured against
    a step-halving-verified RK4 reference."""
    u0 = tuple(float(v) for v in u0)

    def rhs(t, u):
        return np.array([-math.sin(u[1]), u[0]])

    return Problem(
        name="nonlinear_pendulum",
        dim=2,
        rhs=rhs,
        eta=lambda u: float(0.5 * u[0] ** 2 - math.cos(u[1])),
        eta_grad=lambda u: np.array([u[0], math.sin(u[1])]),
        u0=np.array(u0),
        reference=lambda t: pendulum_reference(t, u0),
        reference_policy="numerical",
    )


def bounded_time_dependent_oscillator() -> Problem:
    """Rotation with angular velocity 1 + sin(t)/2, integrated in autonomous
    form with the clock appended as a third component (unit derivative).
    The entropy ignores the clock."""

    def rhs(t, u):
        omega = 1.0 + 0.5 * math.sin(u[2])
        return np.array([-omega * u[1], omega * u[0], 1.0])

    def exact(t):
        phase = t - 0.5 * math.cos(t) + 0.5
        return np.array([math.cos(phase), math.sin(phase), t])

    return Problem(
        name="bounded_oscillator",
        dim=3,
        rhs=rhs,
        eta=lambda u: float(u[0] ** 2 + u[1] ** 2),
        eta_grad=lambda u: np.array([2.0 * u[0], 2.0 * u[1], 0.0]),
        u0=np.array([1.0, 0.0, 0.0]),
        exact=exact,
    )


# a = exp(1/2) + exp(1); the conserved entropy value of the flow below
_A_EXP = math.exp(0.5) + math.e


def conserved_exponential_entropy() -> Problem:
    """Flow conserving exp(u1) + exp(u2), a problem without the oscillators'
    superconvergence structure.

    The closed-form solution follows from the substitution v = exp(u); in a
    numerically safe form (the exponent a*t reaches several hundred over
    long horizons):

        u1(t) = log(a) + 1/2 - logaddexp(1/2, a*t)
        u2(t) = a*t + log(a) - logaddexp(1/2, a*t),   a = exp(1/2) + e.
    """

    def rhs(t, u):
        return np.array([-math.exp(u[1]), math.exp(u[0])])

    def exact(t):
        lse = np.logaddexp(0.5, _A_EXP * t)
        return np.array(
            [math.log(_A_EXP) + 0.5 - lse, _A_EXP * t + math.log(_A_EXP) - lse]
        )

    def eta(u):
        return float(math.exp(u[0]) + math.exp(u[1]))

    return Problem(
        name="conserved_exponential_entropy",
        dim=2,
        rhs=rhs,
        eta=eta,
        eta_grad=lambda u: np.exp(u),
        u0=np.array([1.0, 0.5]),
        exact=exact,
    )
