"""Figures from the benchmark CSV: convergence and work-precision diagrams.

Pure CSV -> figure transforms; nothing numerical is recomputed here beyond
least-squares slopes of the plotted data.  Both entry points validate the
schema and fail with a message listing any missing columns.
"""

from __future__ import annotations

import csv
import math
import sys
from collections import OrderedDict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "SchemaError",
    "EmptyInputError",
    "read_rows",
    "plot_convergence",
    "plot_work_precision",
    "convergence_main",
    "work_precision_main",
]

REQUIRED_COLUMNS = [
    "problem",
    "method",
    "strategy",
    "variant",
    "tol_or_dt",
    "final_error",
    "rhs_calls",
    "status",
]

#: Fixed legend order for the strategy comparison; anything else follows
#: alphabetically.
STRATEGY_ORDER = ["baseline", "naive", "fsal-r", "r-fsal"]


class SchemaError(ValueError):
    """CSV header does not carry the required columns."""


class EmptyInputError(ValueError):
    """CSV contains a header but no data rows."""


def read_rows(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"missing columns in {path}: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise EmptyInputError(f"no data rows in {path}")
    return rows


def _split_status(rows):
    kept = [r for r in rows if r["status"] == "ok"]
    dropped = [r for r in rows if r["status"] != "ok"]
    return kept, dropped


def _series_label(key) -> str:
    parts = [p for p in key if p and p != "-"]
    return "/".join(parts)


def plot_convergence(csv_path: str, out_path: str):
    """Log-log error vs step size with per-series slope annotations and
    dashed order guide lines.  Returns the matplotlib figure."""
    rows = read_rows(csv_path)
    kept, dropped = _split_status(rows)
    if dropped:
        print(f"# dropped {len(dropped)} non-ok rows", file=sys.stderr)
    if not kept:
        raise EmptyInputError(f"no usable rows in {csv_path}")

    series = OrderedDict()
    for row in kept:
        key = (row["problem"], row["method"], row["strategy"], row["variant"])
        series.setdefault(key, []).append(
            (float(row["tol_or_dt"]), float(row["final_error"]))
        )

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    guide_orders = set()
    for key, pts in series.items():
        pts = sorted((d, e) for d, e in pts if e > 0 and math.isfinite(e))
        if not pts:
            continue
        dts = np.array([p[0] for p in pts])
        errs = np.array([p[1] for p in pts])
        slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0]) if len(pts) > 1 else math.nan
        ax.loglog(dts, errs, "o-", label=f"{_series_label(key)} (slope {slope:.2f})")
        if math.isfinite(slope):
            guide_orders.add(round(slope))
    xmin, xmax = ax.get_xlim()
    ymin, _ = ax.get_ylim()
    for order in sorted(guide_orders):
        xs = np.array([xmin, xmax])
        ax.loglog(xs, ymin * (xs / xmin) ** order, "k--", lw=0.6, alpha=0.5)
        ax.annotate(f"order {order}", (xmax, ymin * (xmax / xmin) ** order),
                    fontsize=7, ha="right", va="bottom", alpha=0.7)
    ax.set_xlabel("step size")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    return fig


def plot_work_precision(csv_path: str, out_path: str):
    """Log-log error vs right-hand-side evaluations, one series per strategy
    in fixed legend order.  Returns the matplotlib figure."""
    rows = read_rows(csv_path)
    kept, dropped = _split_status(rows)
    if dropped:
        expected = sum(1 for r in dropped if r["status"] == "expected-failure")
        print(
            f"# dropped {len(dropped)} non-ok rows ({expected} expected-failure)",
            file=sys.stderr,
        )
    if not kept:
        raise EmptyInputError(f"no usable rows in {csv_path}")

    series = {}
    for row in kept:
        series.setdefault(row["strategy"], []).append(
            (int(row["rhs_calls"]), float(row["final_error"]))
        )

    order = [s for s in STRATEGY_ORDER if s in series]
    order += sorted(s for s in series if s not in STRATEGY_ORDER)

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for name in order:
        pts = sorted(series[name])
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=name)
    ax.set_xlabel("right-hand-side evaluations")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    return fig


def _main(fn, argv):
    if len(argv) != 2:
        print(f"usage: {fn.__name__}.py <csv> <out>", file=sys.stderr)
        return 2
    try:
        fn(argv[0], argv[1])
    except (SchemaError, EmptyInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def convergence_main(argv=None) -> int:
    return _main(plot_convergence, sys.argv[1:] if argv is None else argv)


def work_precision_main(argv=None) -> int:
    return _main(plot_work_precision, sys.argv[1:] if argv is None else argv)
