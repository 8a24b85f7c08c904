"""Adaptive explicit Runge-Kutta integration with entropy relaxation.

Embedded FSAL pairs, a PID step-size controller with an arctan limiter, a
scalar relaxation solve that conserves an entropy functional each step, and
four strategies for coupling the two without losing the FSAL evaluation
savings.  A problem registry and a benchmark harness reproduce conservation,
convergence-order and work-precision experiments from the command line.
"""

from .controller import (
    ControllerState,
    DegenerateWeightError,
    Tolerances,
    initial_step_size,
    propose_step,
    weighted_error_norm,
)
from .problems import Problem, get_problem, problem_names
from .relaxation import BracketFailure, RelaxationConfig, solve_gamma
from .stepper import (
    RfsalCompare,
    RfsalVariant,
    RunRecord,
    Stage1,
    StepOutcome,
    StepWorkspace,
    Strategy,
    StrategyKind,
    integrate,
    rk_stages,
)
from .tableaux import Tableau, bs3, dp5, rk4, verify_order_conditions

__all__ = [
    "Tableau",
    "bs3",
    "dp5",
    "rk4",
    "verify_order_conditions",
    "Tolerances",
    "ControllerState",
    "DegenerateWeightError",
    "weighted_error_norm",
    "propose_step",
    "initial_step_size",
    "RelaxationConfig",
    "BracketFailure",
    "solve_gamma",
    "Strategy",
    "StrategyKind",
    "Stage1",
    "RfsalVariant",
    "RfsalCompare",
    "StepWorkspace",
    "StepOutcome",
    "RunRecord",
    "rk_stages",
    "integrate",
    "Problem",
    "get_problem",
    "problem_names",
]

__version__ = "0.1.0"
