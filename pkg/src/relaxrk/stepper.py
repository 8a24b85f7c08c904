"""One-step advancement strategies and the outer adaptive loop.

Four ways of coupling entropy relaxation with an embedded FSAL pair are
implemented, differing in where the relaxation solve sits relative to step
size control and in how the first stage of the following step is obtained:

``baseline``
    Plain embedded FSAL integration, no relaxation.
``naive``
    Relax after the accept decision and invalidate the FSAL cache, so every
    accepted step pays one extra right-hand side evaluation to refresh the
    first stage at the relaxed state.
``fsal-r``
    Relax after the accept decision but seed the next first stage without a
    new evaluation, either with the end-state derivative itself (``simple``)
    or with the gamma-weighted interpolation between the first-stage and
    end-state derivatives (``interpolation``).
``r-fsal``
    Relax before step size control (also for steps that end up rejected),
    evaluate the derivative at the relaxed state, which is the exact first
    stage of the next step, and assemble the embedded solution from one of
    four variants that differ in the derivative substituted for the FSAL
    slot and in whether the embedded update uses dt or gamma*dt.

Right-hand side evaluations are counted exactly; every step function reports
its own delta and `integrate` returns the total.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .controller import (
    ACCEPT_THRESHOLD,
    DEFAULT_BETA,
    ControllerState,
    Tolerances,
    initial_step_size,
    propose_step,
    weighted_error_norm,
)
from .relaxation import BracketFailure, RelaxationConfig, solve_gamma
from .tableaux import Tableau

__all__ = [
    "StrategyKind",
    "Stage1",
    "RfsalVariant",
    "RfsalCompare",
    "Strategy",
    "StepWorkspace",
    "StepOutcome",
    "RunRecord",
    "rk_stages",
    "step_baseline",
    "step_naive",
    "step_fsalr",
    "step_rfsal",
    "integrate",
]


class StrategyKind(Enum):
    BASELINE = "baseline"
    NAIVE = "naive"
    FSAL_R = "fsal-r"
    R_FSAL = "r-fsal"


class Stage1(Enum):
    """First-stage approximation used by the fsal-r strategy."""

    SIMPLE = "simple"
    INTERPOLATION = "interpolation"


class RfsalVariant(Enum):
    """Embedded-solution variants of the r-fsal strategy.

    V1/V2 build the embedded update with the unrelaxed step dt, V3/V4 with
    the relaxed step gamma*dt; V2/V4 substitute the reversed interpolation
    formula for the FSAL slot instead of the relaxed-state derivative.
    """

    V1 = "v1"
    V2 = "v2"
    V3 = "v3"
    V4 = "v4"


class RfsalCompare(Enum):
    """Which pair of updates feeds the error norm in the r-fsal strategy."""

    C1 = "c1"  # candidate vs embedded
    C2 = "c2"  # relaxed candidate vs relaxed embedded
    C3 = "c3"  # relaxed candidate vs embedded


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    fsalr_stage1: Stage1 = Stage1.INTERPOLATION
    rfsal_embedded: RfsalVariant = RfsalVariant.V4
    rfsal_compare: RfsalCompare = RfsalCompare.C3

    @classmethod
    def baseline(cls) -> "Strategy":
        return cls(StrategyKind.BASELINE)

    @classmethod
    def naive(cls) -> "Strategy":
        return cls(StrategyKind.NAIVE)

    @classmethod
    def fsal_r(cls, stage1: Stage1 = Stage1.INTERPOLATION) -> "Strategy":
        return cls(StrategyKind.FSAL_R, fsalr_stage1=stage1)

    @classmethod
    def r_fsal(
        cls,
        variant: RfsalVariant = RfsalVariant.V4,
        compare: RfsalCompare = RfsalCompare.C3,
    ) -> "Strategy":
        return cls(StrategyKind.R_FSAL, rfsal_embedded=variant, rfsal_compare=compare)

    @property
    def label(self) -> str:
        return self.kind.value

    @property
    def variant_label(self) -> str:
        if self.kind is StrategyKind.FSAL_R:
            return self.fsalr_stage1.value
        if self.kind is StrategyKind.R_FSAL:
            return f"{self.rfsal_embedded.value}-{self.rfsal_compare.value}"
        return "-"


@dataclass
class StepWorkspace:
    """Scratch state shared between successive step attempts.

    ``fsal_deriv`` caches the derivative that seeds the first stage of the
    next attempt; it equals (or, under fsal-r, approximates) the right-hand
    side at the current state.  The two relax-retry fields implement the
    bracket-failure policy described at :func:`integrate`.
    """

    fsal_deriv: Optional[np.ndarray] = None
    k: Optional[np.ndarray] = None
    u_candidate: Optional[np.ndarray] = None
    u_hat: Optional[np.ndarray] = None
    u_relaxed: Optional[np.ndarray] = None
    u_next: Optional[np.ndarray] = None
    relax_rejects_this_step: int = 0
    relax_retry_enabled: bool = True


@dataclass
class StepOutcome:
    accepted: bool
    gamma: float
    t_new: float
    dt_used: float
    dt_next: float
    error_norm: float
    rhs_calls: int
    relaxation_fallback: bool = False
    relaxation_rejection: bool = False
    fsalr_cache_error: Optional[float] = None


@dataclass
class RunRecord:
    """Summary statistics of one integration run.

    The field order of the leading block matches the harness CSV schema.
    """

    problem: str
    method: str
    strategy: str
    variant: str
    tol_or_dt: float
    final_error: float
    entropy_drift: float
    rhs_calls: int
    accepted: int
    rejected: int
    gamma_min: float
    gamma_max: float
    status: str
    runtime_ns: int
    mode: str = "adaptive"
    t_final: float = math.nan
    relaxation_fallbacks: int = 0
    relaxation_rejections: int = 0
    steps: Optional[list] = field(default=None, repr=False)
    trajectory: Optional[list] = field(default=None, repr=False)


class _CountingRHS:
    """Wraps a right-hand side and counts evaluations."""

    __slots__ = ("rhs", "calls")

    def __init__(self, rhs):
        self.rhs = rhs
        self.calls = 0

    def __call__(self, t, u):
        self.calls += 1
        return self.rhs(t, u)


@dataclass
class _StepContext:
    f: _CountingRHS
    raw_rhs: Callable
    tableau: Tableau
    strategy: Strategy
    eta: Callable[[np.ndarray], float]
    relax_cfg: RelaxationConfig
    tol: Optional[Tolerances]
    ctrl: Optional[ControllerState]
    track_cache_error: bool = False

    @property
    def adaptive(self) -> bool:
        return self.ctrl is not None


def rk_stages(f, u_start, t, dt, tableau: Tableau, k1=None, include_fsal_stage=True):
    """Evaluate the explicit stages and the candidate update of one step.

    ``k1``, when supplied, is used for the first stage instead of a fresh
    evaluation (requires ``c[0] = 0``).  With ``include_fsal_stage=False``
    the last stage is skipped and its row in ``k`` left zero; this is only
    valid for FSAL tableaux, whose last main weight vanishes.

    Returns ``(k, u_candidate)`` where ``k`` has shape ``(s, n)``.
    """
    a, b, c, s = tableau.a, tableau.b, tableau.c, tableau.s
    if dt <= 0:
        raise ValueError("dt must be positive")
    u_start = np.asarray(u_start, dtype=float)
    k = np.zeros((s, u_start.shape[0]))
    if k1 is not None:
        if c[0] != 0.0:
            raise ValueError("cached first stage requires c[0] = 0")
        k[0] = k1
    else:
        k[0] = f(t, u_start)
    if not include_fsal_stage and not tableau.fsal:
        raise ValueError("only FSAL tableaux may skip the last stage")
    n_stages = s if include_fsal_stage else s - 1
    for i in range(1, n_stages):
        y = u_start + dt * (a[i, :i] @ k[:i])
        k[i] = f(t + c[i] * dt, y)
    return k, u_start + dt * (b @ k)


def _safe_error_norm(u, u_hat, tol: Tolerances) -> float:
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(u_hat))):
        return math.inf
    return weighted_error_norm(u, u_hat, tol)


def _embedded(tableau: Tableau, u, dt, k, fsal_value):
    bh = tableau.b_hat
    return u + dt * (bh[:-1] @ k) + (dt * bh[-1]) * fsal_value


#: Bracket failures in adaptive mode first trigger step-halving retries: the
#: entropy error of the step shrinks like dt^(p+1) while the compensation the
#: rescaling can provide shrinks only linearly, so a root that was lost to a
#: locally flat entropy usually returns after a halving or two.
RELAX_RETRY_BUDGET = 2


def _relax(ctx: _StepContext, ws: StepWorkspace, u_old, u_cand):
    """Run the relaxation solve under the retry/fallback policy.

    Returns ``(status, gamma)`` with status ``"ok"`` (root found, or nothing
    to do), ``"reject"`` (retry the step with a smaller dt) or ``"fallback"``
    (give up and continue unrelaxed).  Retries are suspended after a give-up
    until some step relaxes successfully again, so structurally
    non-conserving right-hand sides degrade to visible gamma = 1 stepping
    instead of shrinking dt forever.
    """
    if np.array_equal(u_cand, u_old):
        return "ok", 1.0
    try:
        gamma, _ = solve_gamma(u_old, u_cand, ctx.eta, ctx.relax_cfg)
    except BracketFailure:
        if (
            ctx.adaptive
            and ws.relax_retry_enabled
            and ws.relax_rejects_this_step < RELAX_RETRY_BUDGET
        ):
            ws.relax_rejects_this_step += 1
            return "reject", 1.0
        ws.relax_rejects_this_step = 0
        ws.relax_retry_enabled = False
        return "fallback", 1.0
    ws.relax_rejects_this_step = 0
    ws.relax_retry_enabled = True
    return "ok", gamma


def _step_with_post_relaxation(ctx: _StepContext, ws: StepWorkspace, u, t, dt) -> StepOutcome:
    """Shared body of the baseline, naive and fsal-r strategies.

    Stages, candidate and embedded solution are identical for the three;
    they differ only in what happens on accept (relaxation and how the next
    first stage is seeded).
    """
    calls0 = ctx.f.calls
    kind = ctx.strategy.kind
    k1 = ws.fsal_deriv if ctx.tableau.fsal else None
    ws.k, ws.u_candidate = rk_stages(ctx.f, u, t, dt, ctx.tableau, k1=k1)
    ws.u_hat = ws.u_relaxed = None

    if ctx.adaptive:
        eps_snapshot = (ctx.ctrl.eps_prev, ctx.ctrl.eps_prev2)
        fsal_value = ws.k[-1]  # equals f(u_candidate) for FSAL tableaux
        ws.u_hat = _embedded(ctx.tableau, u, dt, ws.k, fsal_value)
        w = _safe_error_norm(ws.u_candidate, ws.u_hat, ctx.tol)
        dt_next, accepted, _ = propose_step(ctx.ctrl, w)
    else:
        w, dt_next, accepted = math.nan, dt, True

    if not accepted:
        if ctx.tableau.fsal:
            ws.fsal_deriv = ws.k[0]  # still f at the unchanged current state
        return StepOutcome(False, 1.0, t, dt, dt_next, w, ctx.f.calls - calls0)

    gamma, fallback, cache_err = 1.0, False, None
    if kind is StrategyKind.BASELINE:
        ws.u_next = ws.u_candidate
        t_new = t + dt
        ws.fsal_deriv = ws.k[-1].copy() if ctx.tableau.fsal else None
    else:
        status, gamma = _relax(ctx, ws, u, ws.u_candidate)
        if status == "reject":
            # undo the acceptance bookkeeping and retry at half the step;
            # the estimate history must not advance on a rejected attempt
            ctx.ctrl.eps_prev, ctx.ctrl.eps_prev2 = eps_snapshot
            ctx.ctrl.dt = max(0.5 * dt, ctx.ctrl.dt_min)
            if kind is StrategyKind.FSAL_R:
                # the approximated first stage may itself be what broke the
                # solve; rebuild it exactly on the retry
                ws.fsal_deriv = None
            elif ctx.tableau.fsal:
                ws.fsal_deriv = ws.k[0]
            return StepOutcome(
                False, 1.0, t, dt, ctx.ctrl.dt, w, ctx.f.calls - calls0,
                relaxation_rejection=True,
            )
        fallback = status == "fallback"
        # gamma == 1 is kept exact (no arithmetic noise from u + 1.0*(du))
        ws.u_relaxed = ws.u_candidate if gamma == 1.0 else u + gamma * (ws.u_candidate - u)
        ws.u_next = ws.u_relaxed
        t_new = t + gamma * dt
        if kind is StrategyKind.NAIVE or not ctx.tableau.fsal:
            ws.fsal_deriv = None  # force a fresh evaluation at the relaxed state
        else:  # fsal-r
            fsal_value = ws.k[-1]
            if ctx.strategy.fsalr_stage1 is Stage1.SIMPLE or gamma == 1.0:
                cache = fsal_value.copy()
            else:
                cache = ws.k[0] + gamma * (fsal_value - ws.k[0])
            ws.fsal_deriv = cache
            if ctx.track_cache_error:
                cache_err = float(np.linalg.norm(cache - ctx.raw_rhs(t_new, ws.u_next)))
    return StepOutcome(
        True, gamma, t_new, dt, dt_next, w, ctx.f.calls - calls0, fallback,
        fsalr_cache_error=cache_err,
    )


def step_baseline(ctx, ws, u, t, dt) -> StepOutcome:
    """Embedded FSAL step without relaxation."""
    return _step_with_post_relaxation(ctx, ws, u, t, dt)


def step_naive(ctx, ws, u, t, dt) -> StepOutcome:
    """Relax after accept; the FSAL cache is invalidated, so the next step
    re-evaluates the right-hand side at the relaxed state."""
    return _step_with_post_relaxation(ctx, ws, u, t, dt)


def step_fsalr(ctx, ws, u, t, dt) -> StepOutcome:
    """Relax after accept; the next first stage is approximated from values
    already in hand instead of re-evaluated."""
    return _step_with_post_relaxation(ctx, ws, u, t, dt)


def step_rfsal(ctx: _StepContext, ws: StepWorkspace, u, t, dt) -> StepOutcome:
    """Relax before step size control.

    The relaxation solve runs on every attempt, also those the controller
    later rejects.  The derivative at the relaxed state doubles as the FSAL
    slot of the embedded solution and as the exact first stage of the next
    step, so accepted and rejected attempts cost the same number of
    right-hand side evaluations as a baseline attempt.
    """
    calls0 = ctx.f.calls
    strat = ctx.strategy
    ws.k, ws.u_candidate = rk_stages(
        ctx.f, u, t, dt, ctx.tableau, k1=ws.fsal_deriv, include_fsal_stage=False
    )
    status, gamma = _relax(ctx, ws, u, ws.u_candidate)
    if status == "reject":
        # relaxation precedes step size control here, so a failed solve can
        # reject the attempt before any controller bookkeeping happens
        ctx.ctrl.dt = max(0.5 * dt, ctx.ctrl.dt_min)
        ws.fsal_deriv = ws.k[0]
        return StepOutcome(
            False, 1.0, t, dt, ctx.ctrl.dt, math.nan, ctx.f.calls - calls0,
            relaxation_rejection=True,
        )
    fallback = status == "fallback"
    ws.u_relaxed = ws.u_candidate if gamma == 1.0 else u + gamma * (ws.u_candidate - u)
    t_rel = t + gamma * dt
    fsal_value = ctx.f(t_rel, ws.u_relaxed)

    if ctx.adaptive:
        if strat.rfsal_embedded in (RfsalVariant.V2, RfsalVariant.V4) and gamma != 1.0:
            slot = ws.k[0] + (fsal_value - ws.k[0]) / gamma
        else:
            slot = fsal_value
        dt_emb = dt if strat.rfsal_embedded in (RfsalVariant.V1, RfsalVariant.V2) else gamma * dt
        ws.u_hat = _embedded(ctx.tableau, u, dt_emb, ws.k, slot)
        if strat.rfsal_compare is RfsalCompare.C1:
            w = _safe_error_norm(ws.u_candidate, ws.u_hat, ctx.tol)
        elif strat.rfsal_compare is RfsalCompare.C2:
            u_hat_rel = ws.u_hat if gamma == 1.0 else u + gamma * (ws.u_hat - u)
            w = _safe_error_norm(ws.u_relaxed, u_hat_rel, ctx.tol)
        else:
            w = _safe_error_norm(ws.u_relaxed, ws.u_hat, ctx.tol)
        dt_next, accepted, _ = propose_step(ctx.ctrl, w)
    else:
        ws.u_hat = None
        w, dt_next, accepted = math.nan, dt, True

    if accepted:
        ws.u_next = ws.u_relaxed
        ws.fsal_deriv = fsal_value
        t_new = t_rel
    else:
        # u is unchanged, so the pre-attempt cache (f at u) stays valid; the
        # relaxation solve and the relaxed-state evaluation are wasted.
        t_new = t
    return StepOutcome(
        accepted, gamma, t_new, dt, dt_next, w, ctx.f.calls - calls0, fallback
    )


_STEP_FUNCTIONS = {
    StrategyKind.BASELINE: step_baseline,
    StrategyKind.NAIVE: step_naive,
    StrategyKind.FSAL_R: step_fsalr,
    StrategyKind.R_FSAL: step_rfsal,
}

#: Relative landing tolerance: the loop stops when the remaining interval
#: drops below this fraction of the span.
_LANDING_RTOL = 1e-12


def integrate(
    problem,
    tableau: Tableau,
    strategy: Strategy,
    *,
    t_end: float,
    tol: Optional[Tolerances] = None,
    fixed_dt: Optional[float] = None,
    dt0: Optional[float] = None,
    beta: tuple = DEFAULT_BETA,
    accept_threshold: float = ACCEPT_THRESHOLD,
    dt_min: Optional[float] = None,
    dt_max: Optional[float] = None,
    relax_cfg: Optional[RelaxationConfig] = None,
    max_steps: int = 10_000_000,
    step_log: bool = False,
    trajectory: bool = False,
    track_cache_error: bool = False,
) -> RunRecord:
    """Integrate ``problem`` from its initial time to ``t_end``.

    Adaptive mode (the default) controls the step with the embedded error
    estimate at tolerances ``tol``; passing ``fixed_dt`` disables the
    controller and accepts every step.  The final step is clipped to land on
    ``t_end``; relaxation still rescales the clipped step, so the reported
    ``t_final`` is the actual final time and the reference error is
    evaluated there.

    The run aborts with a diagnostic status after ``max_steps`` attempts,
    when the controller step collapses to ``dt_min``, or when the state
    stops being finite.
    """
    if (fixed_dt is None) == (tol is None):
        if fixed_dt is None:
            tol = tol or Tolerances()
        else:
            raise ValueError("pass either tol (adaptive) or fixed_dt (fixed), not both")
    adaptive = fixed_dt is None
    t0 = problem.t0
    if t_end <= t0:
        raise ValueError("t_end must exceed the initial time")
    span = t_end - t0

    if adaptive:
        if not tableau.has_embedded:
            raise ValueError(f"tableau {tableau.name!r} has no embedded estimator")
        if not tableau.fsal and strategy.kind is not StrategyKind.BASELINE:
            raise ValueError("relaxation strategies require an FSAL tableau in adaptive mode")
    if strategy.kind in (StrategyKind.FSAL_R, StrategyKind.R_FSAL) and not tableau.fsal:
        raise ValueError(f"{strategy.label} requires an FSAL tableau")

    counter = _CountingRHS(problem.rhs)
    u = np.array(problem.u0, dtype=float)
    t = float(t0)
    eta0 = problem.eta(u)
    drift = 0.0

    ctrl = None
    f0 = None
    if adaptive:
        p_ctrl = min(tableau.p, tableau.p_hat + 1)
        lo = 1e-14 * span if dt_min is None else dt_min
        hi = span if dt_max is None else dt_max
        if dt0 is None:
            dt0, f0 = initial_step_size(counter, t, u, p_ctrl, tol)
        ctrl = ControllerState(
            dt=min(max(dt0, lo), hi),
            p_ctrl=p_ctrl,
            beta=beta,
            dt_min=lo,
            dt_max=hi,
            accept_threshold=accept_threshold,
        )

    ctx = _StepContext(
        f=counter,
        raw_rhs=problem.rhs,
        tableau=tableau,
        strategy=strategy,
        eta=problem.eta,
        relax_cfg=relax_cfg or RelaxationConfig(),
        tol=tol,
        ctrl=ctrl,
        track_cache_error=track_cache_error,
    )
    ws = StepWorkspace(fsal_deriv=f0)
    step_fn = _STEP_FUNCTIONS[strategy.kind]

    accepted = rejected = fallbacks = relax_rejections = 0
    gamma_min, gamma_max = math.inf, -math.inf
    steps = [] if step_log else None
    traj = [] if trajectory else None
    status = "ok"
    t_start_ns = time.perf_counter_ns()

    while t < t_end - _LANDING_RTOL * span:
        if accepted + rejected >= max_steps:
            status = "max_steps"
            break
        dt_att = ctrl.dt if adaptive else fixed_dt
        if t + dt_att > t_end:
            dt_att = t_end - t
        outcome = step_fn(ctx, ws, u, t, dt_att)
        if outcome.relaxation_fallback:
            fallbacks += 1
        if outcome.relaxation_rejection:
            relax_rejections += 1
        if steps is not None:
            steps.append(outcome)
        if outcome.accepted:
            accepted += 1
            u = ws.u_next
            t = outcome.t_new
            if not np.all(np.isfinite(u)):
                status = "diverged"
                break
            gamma_min = min(gamma_min, outcome.gamma)
            gamma_max = max(gamma_max, outcome.gamma)
            eta_now = problem.eta(u)
            drift = max(drift, abs(eta_now - eta0))
            if not math.isfinite(eta_now):
                status = "diverged"
                break
            if traj is not None:
                traj.append((t, u.copy(), outcome.gamma, outcome.dt_used, eta_now))
        else:
            rejected += 1
            if adaptive and ctrl.dt <= ctrl.dt_min:
                status = "dt_collapse"
                break
    runtime_ns = time.perf_counter_ns() - t_start_ns

    final_error = math.nan
    if status == "ok":
        final_error = problem.error(u, t)
    if accepted == 0:
        gamma_min = gamma_max = math.nan

    return RunRecord(
        problem=problem.name,
        method=tableau.name,
        strategy=strategy.label,
        variant=strategy.variant_label,
        tol_or_dt=(tol.tau_a if adaptive else fixed_dt),
        final_error=final_error,
        entropy_drift=drift,
        rhs_calls=counter.calls,
        accepted=accepted,
        rejected=rejected,
        gamma_min=gamma_min,
        gamma_max=gamma_max,
        status=status,
        runtime_ns=runtime_ns,
        mode="adaptive" if adaptive else "fixed",
        t_final=t,
        relaxation_fallbacks=fallbacks,
        relaxation_rejections=relax_rejections,
        steps=steps,
        trajectory=traj,
    )
