"""Command-line front end for convergence studies and work-precision sweeps.

Examples
--------
Work-precision sweep of all four strategies on the BBM problem::

    relaxrk --mode work-precision --problem bbm_quadratic --method bs3 \\
        --strategy r-fsal --tols 1e-4,1e-5,1e-6 --tend 30 --out bbm.csv

Fixed-step convergence ladder::

    relaxrk --mode convergence --problem harmonic_oscillator --method dp5 \\
        --strategy naive --dts 0.2,0.1,0.05,0.025 --tend 10 --out conv.csv

Exit status is 0 iff every produced row has status ``ok`` or
``expected-failure``.
"""

from __future__ import annotations

import argparse
import sys

from .controller import DEFAULT_BETA
from .harness import (
    ExperimentSpec,
    run_convergence,
    run_single,
    run_work_precision,
    write_csv,
)
from .problems import problem_names

__all__ = ["main", "build_parser"]

_OK_STATUSES = {"ok", "expected-failure"}


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaxrk",
        description="Entropy-relaxation Runge-Kutta benchmark harness",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument(
        "--mode",
        choices=["convergence", "work-precision", "single"],
        required=True,
    )
    parser.add_argument("--problem", required=True, choices=problem_names())
    parser.add_argument("--method", default="bs3", choices=["bs3", "dp5", "rk4"])
    parser.add_argument(
        "--strategy",
        default="naive",
        choices=["baseline", "naive", "fsal-r", "r-fsal"],
    )
    parser.add_argument(
        "--fsalr-stage1", default="interpolation", choices=["simple", "interpolation"]
    )
    parser.add_argument("--rfsal-variant", default="v4", choices=["v1", "v2", "v3", "v4"])
    parser.add_argument("--rfsal-compare", default="c3", choices=["c1", "c2", "c3"])
    parser.add_argument("--tols", type=_floats, default=None, help="comma-separated tolerance ladder")
    parser.add_argument("--dts", type=_floats, default=None, help="comma-separated fixed step ladder")
    parser.add_argument("--tend", type=float, default=10.0)
    parser.add_argument("--abs-tol", type=float, default=1e-6)
    parser.add_argument("--rel-tol", type=float, default=1e-6)
    parser.add_argument("--beta", type=_floats, default=list(DEFAULT_BETA), help="controller gains b1,b2,b3")
    parser.add_argument("--dt0", type=float, default=None, help="initial step (default: automatic heuristic)")
    parser.add_argument("--out", default="-", help="CSV output path, '-' for stdout")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trajectory", default=None, help="dump (t,gamma,dt,eta,u) series to this CSV (single mode)")
    parser.add_argument("--dg-elements", type=int, default=8)
    parser.add_argument("--dg-degree", type=int, default=5)
    parser.add_argument("--bbm-modes", type=int, default=64)
    parser.add_argument("--pendulum-u0", type=_floats, default=[1.5, 0.0])
    return parser


def _problem_kwargs(args) -> dict:
    if args.problem == "advection_dg":
        return {"n_elements": args.dg_elements, "degree": args.dg_degree}
    if args.problem in ("bbm_quadratic", "bbm_cubic"):
        return {"n_modes": args.bbm_modes}
    if args.problem == "nonlinear_pendulum":
        return {"u0": tuple(args.pendulum_u0)}
    return {}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if len(args.beta) != 3:
        print("error: --beta needs exactly three gains", file=sys.stderr)
        return 2
    spec = ExperimentSpec(
        mode=args.mode,
        problem=args.problem,
        method=args.method,
        strategy=args.strategy,
        fsalr_stage1=args.fsalr_stage1,
        rfsal_variant=args.rfsal_variant,
        rfsal_compare=args.rfsal_compare,
        dts=args.dts or (),
        tols=args.tols or (),
        t_end=args.tend,
        tau_a=args.abs_tol,
        tau_r=args.rel_tol,
        beta=tuple(args.beta),
        dt0=args.dt0,
        seed=args.seed,
        out=args.out,
        trajectory=args.trajectory,
        problem_kwargs=_problem_kwargs(args),
    )

    if spec.mode == "convergence":
        records, slope = run_convergence(spec)
        print(f"# fitted slope: {slope:.3f}", file=sys.stderr)
    elif spec.mode == "work-precision":
        records = run_work_precision(spec)
    else:
        record, traj_path = run_single(spec)
        records = [record]
        if traj_path:
            print(f"# trajectory written to {traj_path}", file=sys.stderr)

    if args.out == "-":
        write_csv(records, sys.stdout)
    else:
        write_csv(records, args.out)
        print(f"# {len(records)} rows written to {args.out}", file=sys.stderr)

    return 0 if all(r.status in _OK_STATUSES for r in records) else 1


if __name__ == "__main__":
    sys.exit(main())
