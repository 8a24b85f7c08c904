"""Test problems: each bundles a right-hand side, an entropy functional with
its gradient, the initial state and an exact or high-accuracy reference
solution, plus the discrete-L2 weights used for error reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = ["Problem", "get_problem", "problem_names"]


@dataclass(frozen=True)
class Problem:
    """Autonomous-form initial value problem with a conserved entropy.

    ``rhs`` must be pure (no shared mutable state); the integration loop
    relies on this for exact evaluation counting and reproducibility.
    ``norm_weights`` define the discrete L2 norm used for error reporting:
    ``err = sqrt(sum(w * (u - ref)**2))`` (1/N for ODE problems, quadrature
    weights for semidiscretized PDEs).
    """

    name: str
    dim: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    eta: Callable[[np.ndarray], float]
    eta_grad: Callable[[np.ndarray], np.ndarray]
    u0: np.ndarray
    t0: float = 0.0
    exact: Optional[Callable[[float], np.ndarray]] = None
    reference: Optional[Callable[[float], np.ndarray]] = None
    reference_policy: str = "analytical"
    norm_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "u0", np.asarray(self.u0, dtype=float))
        if self.norm_weights is None:
            object.__setattr__(self, "norm_weights", np.full(self.dim, 1.0 / self.dim))
        self.u0.setflags(write=False)
        self.norm_weights.setflags(write=False)

    def reference_solution(self, t: float) -> np.ndarray:
        if self.exact is not None:
            return self.exact(t)
        if self.reference is not None:
            return self.reference(t)
        raise ValueError(f"problem {self.name!r} has no reference solution")

    def error(self, u: np.ndarray, t: float) -> float:
        """Discrete-L2 distance between ``u`` and the reference at time ``t``."""
        try:
            ref = self.reference_solution(t)
        except ValueError:
            return math.nan
        return float(np.sqrt(np.sum(self.norm_weights * (u - ref) ** 2)))


def get_problem(name: str, **kwargs) -> Problem:
    """Instantiate a registered problem by name."""
    from . import ode, pde

    factories = {
        "harmonic_oscillator": ode.harmonic_oscillator,
        "nonlinear_oscillator": ode.nonlinear_oscillator,
        "nonlinear_pendulum": ode.nonlinear_pendulum,
        "bounded_oscillator": ode.bounded_time_dependent_oscillator,
        "conserved_exponential_entropy": ode.conserved_exponential_entropy,
        "advection_dg": pde.linear_advection_dg,
        "bbm_quadratic": lambda **kw: pde.bbm_fourier(invariant="quadratic", **kw),
        "bbm_cubic": lambda **kw: pde.bbm_fourier(invariant="cubic", **kw),
    }
    if name not in factories:
        raise KeyError(f"unknown problem {name!r}; available: {sorted(factories)}")
    return factories[name](**kwargs)


def problem_names() -> list[str]:
    return [
        "harmonic_oscillator",
        "nonlinear_oscillator",
        "nonlinear_pendulum",
        "bounded_oscillator",
        "conserved_exponential_entropy",
        "advection_dg",
        "bbm_quadratic",
        "bbm_cubic",
    ]
