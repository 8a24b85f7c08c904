import csv
import math
import re

import numpy as np
import pytest

from rkplots.figures import (
    EmptyInputError,
    SchemaError,
    plot_convergence,
    plot_work_precision,
    read_rows,
)

HEADER = [
    "problem",
    "method",
    "strategy",
    "variant",
    "tol_or_dt",
    "final_error",
    "entropy_drift",
    "rhs_calls",
    "accepted",
    "rejected",
    "gamma_min",
    "gamma_max",
    "status",
    "runtime_ns",
]


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        writer.writerows(rows)


def conv_row(dt, err, strategy="naive", status="ok"):
    return ["osc", "bs3", strategy, "-", repr(dt), repr(err), "0.0", 100, 50, 0, "1.0", "1.0", status, 1]


def wp_row(rhs, err, strategy, status="ok"):
    return ["osc", "bs3", strategy, "-", "1e-06", repr(err), "0.0", rhs, 50, 0, "1.0", "1.0", status, 1]


class TestConvergence:
    def test_exact_slope_annotation_and_round_trip(self, tmp_path):
        dts = [0.1 * 2.0**-k for k in range(5)]
        rows = [conv_row(dt, dt**3) for dt in dts]
        path = tmp_path / "conv.csv"
        out = tmp_path / "conv.png"
        write_rows(path, rows)
        fig = plot_convergence(str(path), str(out))
        assert out.exists()
        (line,) = [l for l in fig.axes[0].get_lines() if l.get_label().startswith("osc")]
        # data round-trips through the figure
        assert np.allclose(sorted(line.get_xdata()), sorted(dts), rtol=1e-12)
        assert np.allclose(sorted(line.get_ydata()), sorted(d**3 for d in dts), rtol=1e-12)
        # annotated slope is 3.00 +- 0.01
        match = re.search(r"slope (-?\d+\.\d+)", line.get_label())
        assert match
        assert float(match.group(1)) == pytest.approx(3.0, abs=0.01)

    def test_empty_csv_raises(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_rows(path, [])
        with pytest.raises(EmptyInputError):
            plot_convergence(str(path), str(tmp_path / "x.png"))

    def test_missing_columns_listed(self, tmp_path):
        path = tmp_path / "bad.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["problem", "tol_or_dt"])
            writer.writerow(["osc", "0.1"])
        with pytest.raises(SchemaError) as err:
            plot_convergence(str(path), str(tmp_path / "x.png"))
        for col in ("final_error", "status", "strategy"):
            assert col in str(err.value)

    def test_multiple_series_grouped(self, tmp_path):
        dts = [0.1, 0.05, 0.025]
        rows = [conv_row(dt, dt**3, strategy="naive") for dt in dts]
        rows += [conv_row(dt, 2 * dt**4, strategy="baseline") for dt in dts]
        path = tmp_path / "two.csv"
        write_rows(path, rows)
        fig = plot_convergence(str(path), str(tmp_path / "two.png"))
        labels = [l.get_label() for l in fig.axes[0].get_lines() if l.get_label().startswith("osc")]
        assert len(labels) == 2


class TestWorkPrecision:
    def test_one_series_per_strategy_in_fixed_order(self, tmp_path):
        rows = []
        for strategy, shift in (("r-fsal", 3), ("baseline", 0), ("naive", 1), ("fsal-r", 2)):
            for k in range(4):
                rows.append(wp_row(100 * 2**k + shift, 10.0 ** -(k + 3), strategy))
        path = tmp_path / "wp.csv"
        write_rows(path, rows)
        fig = plot_work_precision(str(path), str(tmp_path / "wp.png"))
        labels = [l.get_label() for l in fig.axes[0].get_lines()]
        assert labels == ["baseline", "naive", "fsal-r", "r-fsal"]

    def test_horizontal_offset_between_matched_error_series(self, tmp_path):
        errs = [1e-3, 1e-4, 1e-5]
        rows = [wp_row(1000 * 10**k, e, "baseline") for k, e in enumerate(errs)]
        rows += [wp_row(int(1.25 * 1000 * 10**k), e, "naive") for k, e in enumerate(errs)]
        path = tmp_path / "offset.csv"
        write_rows(path, rows)
        fig = plot_work_precision(str(path), str(tmp_path / "offset.png"))
        lines = {l.get_label(): l for l in fig.axes[0].get_lines()}
        ratio = np.array(lines["naive"].get_xdata()) / np.array(lines["baseline"].get_xdata())
        assert np.allclose(ratio, 1.25, rtol=1e-12)
        assert np.array_equal(lines["naive"].get_ydata(), lines["baseline"].get_ydata())

    def test_expected_failure_rows_dropped_and_reported(self, tmp_path, capsys):
        rows = [wp_row(100, 1e-3, "baseline"), wp_row(110, 1e-3, "r-fsal", status="expected-failure")]
        path = tmp_path / "drop.csv"
        write_rows(path, rows)
        fig = plot_work_precision(str(path), str(tmp_path / "drop.png"))
        labels = [l.get_label() for l in fig.axes[0].get_lines()]
        assert labels == ["baseline"]
        err = capsys.readouterr().err
        assert "expected-failure" in err

    def test_all_rows_failed_raises(self, tmp_path):
        rows = [wp_row(100, 1e-3, "naive", status="dt_collapse")]
        path = tmp_path / "allbad.csv"
        write_rows(path, rows)
        with pytest.raises(EmptyInputError):
            plot_work_precision(str(path), str(tmp_path / "x.png"))


class TestScriptEntrypoints:
    def test_usage_error(self):
        from rkplots.figures import convergence_main

        assert convergence_main([]) == 2

    def test_schema_error_exit_code(self, tmp_path):
        from rkplots.figures import work_precision_main

        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        assert work_precision_main([str(path), str(tmp_path / "o.png")]) == 1

    def test_happy_path_exit_zero(self, tmp_path):
        from rkplots.figures import convergence_main

        path = tmp_path / "ok.csv"
        write_rows(path, [conv_row(0.1, 1e-3), conv_row(0.05, 1.25e-4)])
        assert convergence_main([str(path), str(tmp_path / "o.png")]) == 0
        assert (tmp_path / "o.png").exists()


def test_read_rows_round_trip(tmp_path):
    path = tmp_path / "rows.csv"
    write_rows(path, [conv_row(0.1, 1e-3)])
    rows = read_rows(str(path))
    assert rows[0]["problem"] == "osc"
    assert float(rows[0]["tol_or_dt"]) == 0.1
