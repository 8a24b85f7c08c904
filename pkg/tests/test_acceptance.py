"""Acceptance suite: one test per acceptance criterion, each printing a
single PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Quantitative gates (slopes, call-count ratios, drift bounds) are asserted at
their stated tolerances.  Horizons and step ladders are chosen so each
measurement is in its asymptotic regime and statistically meaningful at desk
scale; the choices are documented inline.
"""

import math

import numpy as np
import pytest

from relaxrk import (
    RelaxationConfig,
    RfsalCompare,
    RfsalVariant,
    Stage1,
    Strategy,
    Tolerances,
    bs3,
    dp5,
    get_problem,
    integrate,
    rk4,
)
from relaxrk.harness import fit_slope
from relaxrk.problems.pde import FourierGrid, bbm_soliton_parameters, gauss_lobatto, lagrange_diff_matrix

RELAX_STRATEGIES = {
    "naive": Strategy.naive(),
    "fsal-r": Strategy.fsal_r(),
    "r-fsal": Strategy.r_fsal(),
}

ODE_PROBLEMS = [
    "harmonic_oscillator",
    "nonlinear_oscillator",
    "nonlinear_pendulum",
    "bounded_oscillator",
    "conserved_exponential_entropy",
]
PDE_PROBLEMS = ["advection_dg", "bbm_quadratic", "bbm_cubic"]


def report(criterion: int, label: str, ok: bool, detail: str = ""):
    state = "PASS" if ok else "FAIL"
    print(f"[{state}] criterion {criterion:2d}: {label}" + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {criterion}: {label} {detail}"


def dyadic(base: float, n: int) -> list[float]:
    return [base * 2.0**-k for k in range(n)]


# ---------------------------------------------------------------------------
# 1. Conservation


def test_criterion_01_conservation():
    tol = Tolerances(1e-6, 1e-6)
    worst = ("", 0.0)
    for pname in ODE_PROBLEMS + PDE_PROBLEMS:
        problem = get_problem(pname)
        t_end = 100.0 if pname in ODE_PROBLEMS else 30.0
        scale = max(1.0, abs(problem.eta(problem.u0)))
        for mname, tab in (("bs3", bs3()), ("dp5", dp5())):
            for sname, strat in RELAX_STRATEGIES.items():
                rec = integrate(problem, tab, strat, t_end=t_end, tol=tol)
                assert rec.status == "ok", (pname, mname, sname, rec.status)
                bound = rec.accepted * 1e-13 * scale
                frac = rec.entropy_drift / bound if bound else 0.0
                if frac > worst[1]:
                    worst = (f"{pname}/{mname}/{sname}", frac)
                assert rec.entropy_drift <= bound, (
                    pname, mname, sname, rec.entropy_drift, bound,
                )
    # the unrelaxed baseline visibly drifts at loose tolerance
    harmonic = get_problem("harmonic_oscillator")
    base = integrate(harmonic, bs3(), Strategy.baseline(), t_end=100.0, tol=Tolerances(1e-4, 1e-4))
    report(
        1,
        "entropy drift <= accepted * 1e-13 * scale for all strategy/problem/method triples",
        base.entropy_drift > 1e-8,
        f"worst relaxed drift at {worst[1]:.1%} of bound ({worst[0]}); baseline drift {base.entropy_drift:.1e}",
    )


# ---------------------------------------------------------------------------
# 2. Order preservation (all strategies and variants, fixed step)


def _all_strategy_variants():
    out = [("baseline", Strategy.baseline()), ("naive", Strategy.naive())]
    for stage1 in Stage1:
        out.append((f"fsal-r/{stage1.value}", Strategy.fsal_r(stage1)))
    for variant in RfsalVariant:
        out.append((f"r-fsal/{variant.value}", Strategy.r_fsal(variant)))
    return out


def test_criterion_02_order_preservation():
    problem = get_problem("conserved_exponential_entropy")
    dts = dyadic(0.1, 7)  # 0.1 * 2^-k, k = 0..6
    results = []
    for mname, tab, floor in (("bs3", bs3(), 2.75), ("dp5", dp5(), 4.75)):
        for label, strat in _all_strategy_variants():
            errs = [
                integrate(problem, tab, strat, t_end=5.0, fixed_dt=dt).final_error
                for dt in dts
            ]
            slope = fit_slope(dts, errs)
            results.append((f"{mname}/{label}", slope, floor))
    ok = all(s >= floor for _, s, floor in results)
    worst = min(results, key=lambda r: r[1] - r[2])
    report(
        2,
        "fixed-step slopes: bs3 >= 2.75, dp5 >= 4.75 for every strategy and variant",
        ok,
        f"lowest margin {worst[0]}: slope {worst[1]:.2f} vs {worst[2]}",
    )


# ---------------------------------------------------------------------------
# 3. Superconvergence on the oscillators


def test_criterion_03_superconvergence():
    cases = [
        ("bs3", bs3(), dyadic(0.1, 6), 3.75, math.inf),
        ("dp5", dp5(), dyadic(0.2, 5), 5.75, math.inf),
        ("rk4", rk4(), dyadic(0.1, 6), 3.75, 4.5),
    ]
    details = []
    ok = True
    for pname in ("harmonic_oscillator", "nonlinear_oscillator"):
        problem = get_problem(pname)
        for mname, tab, dts, lo, hi in cases:
            errs = [
                integrate(problem, tab, Strategy.naive(), t_end=10.0, fixed_dt=dt).final_error
                for dt in dts
            ]
            slope = fit_slope(dts, errs)
            ok = ok and lo <= slope <= hi
            details.append(f"{pname[:8]}/{mname}={slope:.2f}")
    report(
        3,
        "relaxed slopes: bs3 >= 3.75, dp5 >= 5.75, rk4 in [3.75, 4.5] on both oscillators",
        ok,
        " ".join(details),
    )


# ---------------------------------------------------------------------------
# 4. gamma = 1 + O(dt^{p-1})

#: Measurement-grade relaxation tolerances: the gamma deviations probed here
#: reach 1e-11, so the solve must not snap to gamma = 1 at the default
#: conservation threshold.
MEASURE_CFG = RelaxationConfig(gamma_tol=1e-16, residual_tol=1e-15)


def _gamma_ladder(problem, tab, dts):
    out = []
    for dt in dts:
        rec = integrate(
            problem, tab, Strategy.naive(), t_end=10.0, fixed_dt=dt,
            trajectory=True, relax_cfg=MEASURE_CFG,
        )
        # full steps only; the clipped landing steps carry solver noise
        out.append(max(abs(g - 1.0) for (_, _, g, du, _) in rec.trajectory if du == dt))
    return out


def test_criterion_04_gamma_order():
    problem = get_problem("nonlinear_oscillator")
    slopes = {}
    # dp5's leading gamma coefficient changes sign near dt = 0.15 on this
    # problem, so its ladder sits below that
    for mname, tab, dts in (("bs3", bs3(), dyadic(0.1, 6)), ("dp5", dp5(), dyadic(0.1, 4))):
        slopes[mname] = (fit_slope(dts, _gamma_ladder(problem, tab, dts)), tab.p - 1.25)
    ok = all(s >= floor for s, floor in slopes.values())
    report(
        4,
        "slope of max|gamma - 1| vs dt >= p - 1.25 on the nonlinear oscillator",
        ok,
        " ".join(f"{m}={s:.2f}(>={f})" for m, (s, f) in slopes.items()),
    )


# ---------------------------------------------------------------------------
# 5. First-stage approximation accuracy inside fsal-r


def _cache_ladder(problem, tab, stage1, dts):
    out = []
    for dt in dts:
        rec = integrate(
            problem, tab, Strategy.fsal_r(stage1), t_end=5.0, fixed_dt=dt,
            step_log=True, track_cache_error=True, relax_cfg=MEASURE_CFG,
        )
        out.append(
            max(
                o.fsalr_cache_error
                for o in rec.steps
                if o.fsalr_cache_error is not None and o.dt_used == dt
            )
        )
    return out


def test_criterion_05_approximation_lemmas():
    problem = get_problem("nonlinear_oscillator")
    results = []
    for mname, tab, dts in (("bs3", bs3(), dyadic(0.1, 6)), ("dp5", dp5(), dyadic(0.1, 4))):
        simple = fit_slope(dts, _cache_ladder(problem, tab, Stage1.SIMPLE, dts))
        interp = fit_slope(dts, _cache_ladder(problem, tab, Stage1.INTERPOLATION, dts))
        results.append((mname, simple, tab.p - 0.25, interp, tab.p + 0.75))
    ok = all(s >= sf and i >= jf for _, s, sf, i, jf in results)
    report(
        5,
        "cached-stage error slopes: simple >= p - 0.25, interpolation >= p + 0.75",
        ok,
        " ".join(f"{m}: simple={s:.2f} interp={i:.2f}" for m, s, _, i, _ in results),
    )


# ---------------------------------------------------------------------------
# 6. FSAL efficiency at matched tolerance

# configurations with enough accepted steps that a one-attempt trajectory
# difference cannot tip the 5% gates (A_naive >~ 20 stages)
EFFICIENCY_CONFIGS = [
    ("bbm_quadratic", "bs3", bs3(), 1e-7, 30.0),
    ("bbm_quadratic", "dp5", dp5(), 1e-9, 30.0),
    ("conserved_exponential_entropy", "bs3", bs3(), 1e-8, 10.0),
    ("conserved_exponential_entropy", "dp5", dp5(), 1e-12, 10.0),
]


def test_criterion_06_fsal_efficiency():
    details = []
    ok = True
    for pname, mname, tab, tolv, t_end in EFFICIENCY_CONFIGS:
        problem = get_problem(pname)
        tol = Tolerances(tolv, tolv)
        recs = {
            name: integrate(problem, tab, strat, t_end=t_end, tol=tol)
            for name, strat in [("baseline", Strategy.baseline())] + list(RELAX_STRATEGIES.items())
        }
        b = recs["baseline"].rhs_calls
        f = recs["fsal-r"].rhs_calls
        n = recs["naive"].rhs_calls
        r = recs["r-fsal"].rhs_calls
        a_naive = recs["naive"].accepted
        case_ok = (f / b <= 1.05) and (n - f >= 0.9 * a_naive) and (r / b <= 1.10)
        ok = ok and case_ok
        details.append(f"{pname[:3]}/{mname}: f/b={f/b:.3f} r/b={r/b:.3f} n-f={n-f}>={0.9*a_naive:.0f}")
    report(
        6,
        "rhs(fsal-r)/rhs(baseline) <= 1.05, naive - fsal-r >= 0.9*accepted, r-fsal <= 1.10*baseline",
        ok,
        "; ".join(details),
    )


# ---------------------------------------------------------------------------
# 7. Error parity across the tolerance ladder


def test_criterion_07_error_parity():
    tols = [10.0**-k for k in range(4, 10)]
    worst = ("", 0.0)
    ok = True
    for pname in ("bbm_quadratic", "conserved_exponential_entropy", "nonlinear_oscillator"):
        problem = get_problem(pname)
        for mname, tab in (("bs3", bs3()), ("dp5", dp5())):
            for tolv in tols:
                tol = Tolerances(tolv, tolv)
                errs = {
                    name: integrate(problem, tab, strat, t_end=10.0, tol=tol).final_error
                    for name, strat in RELAX_STRATEGIES.items()
                }
                for name in ("fsal-r", "r-fsal"):
                    ratio = errs[name] / errs["naive"]
                    if ratio > worst[1]:
                        worst = (f"{pname}/{mname}/{name}@{tolv:.0e}", ratio)
                    ok = ok and ratio <= 3.0
    report(
        7,
        "fsal-r and r-fsal final errors within 3x of naive at each tolerance 1e-4..1e-9",
        ok,
        f"worst ratio {worst[1]:.2f} at {worst[0]}",
    )


# ---------------------------------------------------------------------------
# 8. Semidiscretization oracles


def test_criterion_08_semidiscretization_oracles():
    checks = []
    # DG differentiation exactness through degree 5
    nodes, _ = gauss_lobatto(6)
    D = lagrange_diff_matrix(nodes)
    residual = max(
        float(np.max(np.abs(D @ nodes**k - (k * nodes ** (k - 1) if k else np.zeros_like(nodes)))))
        for k in range(6)
    )
    checks.append(("dg-exactness", residual <= 1e-12, f"{residual:.1e}"))
    # DG energy conservation
    adv = get_problem("advection_dg")
    rng = np.random.default_rng(0)
    dg_dot = max(
        abs(adv.eta_grad(u) @ adv.rhs(0.0, u)) / (u @ u)
        for u in rng.normal(size=(10, adv.dim))
    )
    checks.append(("dg-energy", dg_dot <= 1e-12, f"{dg_dot:.1e}"))
    # Fourier skew-symmetry
    grid = FourierGrid.create()
    skew = float(np.max(np.abs(grid.D1 + grid.D1.T)))
    checks.append(("fourier-skew", skew <= 1e-12, f"{skew:.1e}"))
    # BBM linear invariant constancy over an adaptive relaxed run
    bbm = get_problem("bbm_quadratic")
    dx = bbm.norm_weights[0]
    rec = integrate(bbm, bs3(), Strategy.r_fsal(), t_end=10.0, tol=Tolerances(1e-6, 1e-6), trajectory=True)
    j1_0 = dx * float(np.sum(bbm.u0))
    j1_drift = max(abs(dx * float(np.sum(u)) - j1_0) for _, u, *_ in rec.trajectory)
    checks.append(("bbm-j1", j1_drift <= 1e-12, f"{j1_drift:.1e}"))
    # soliton constants
    amp, width = bbm_soliton_parameters(1.2)
    checks.append(("soliton-A", abs(amp - 0.6) <= 1e-12, f"{amp}"))
    checks.append(("soliton-K", abs(width - 0.2041241) <= 1e-6, f"{width:.7f}"))
    ok = all(c[1] for c in checks)
    report(
        8,
        "DG exactness/energy, Fourier skew-symmetry, BBM J1 constancy, soliton constants",
        ok,
        " ".join(f"{n}={d}" for n, _, d in checks),
    )


# ---------------------------------------------------------------------------
# 9. Expected failure of the dt-based r-fsal estimator variants


def test_criterion_09_expected_failure_dt_variants():
    """The dt-based embedded variants are stated to break on the
    time-dependent problem; the runs below reproduce that experiment.

    Implemented faithfully (relaxed time bookkeeping, embedded update built
    with dt), the runs remain bounded and finish cleanly, so this criterion
    records an honest failure; see the work-precision exclusion list for how
    the variants are nevertheless dropped from comparisons.
    """
    problem = get_problem("bounded_oscillator")
    tols = [10.0**-k for k in range(4, 11)]
    statuses = {}
    for variant in (RfsalVariant.V1, RfsalVariant.V2):
        for tolv in tols:
            rec = integrate(
                problem,
                bs3(),
                Strategy.r_fsal(variant, RfsalCompare.C3),
                t_end=100.0,
                tol=Tolerances(tolv, tolv),
                max_steps=2_000_000,
            )
            statuses[(variant.value, tolv)] = rec.status
    failures = {k: v for k, v in statuses.items() if v != "ok"}
    report(
        9,
        "r-fsal v1/v2 on the bounded oscillator terminate with a failure status",
        bool(failures) and all(v != "ok" for v in statuses.values()),
        f"statuses={sorted(set(statuses.values()))}",
    )


# ---------------------------------------------------------------------------
# 10. Step size control stability on the mildly stiff DG problem


def test_criterion_10_step_control_stability():
    problem = get_problem("advection_dg")
    tol = Tolerances(1e-4, 1e-4)
    details = []
    ok = True
    for name, strat in [("baseline", Strategy.baseline())] + list(RELAX_STRATEGIES.items()):
        rec = integrate(problem, bs3(), strat, t_end=30.0, tol=tol)
        frac = rec.rejected / max(1, rec.accepted + rec.rejected)
        case_ok = rec.status == "ok" and frac <= 0.20
        ok = ok and case_ok
        details.append(f"{name}: rejected {frac:.1%} status={rec.status}")
    report(
        10,
        "DG advection at loose tolerance: <= 20% rejections, no dt collapse",
        ok,
        "; ".join(details),
    )
