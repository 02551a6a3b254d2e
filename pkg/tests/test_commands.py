import numpy as np
import pandas as pd
import pytest

from app import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from commands.selftest import CHECKS, run_checks
from exports.export_engine import read_manifest

TIMESERIES = ["timeseries", "--spin", "1", "--B0", "0.05", "--B1", "0.5", "--omega", "1.0",
              "--samples", "2", "--t-max-pi", "1"]
SWEEP = ["sweep", "--spin", "1", "--methods", "rwa-reduced,chrw", "--samples", "4", "--window-pi", "1",
         "--points", "2", "--from", "0.9", "--to", "1.1"]


def test_timeseries_exact_only(tmp_path):
    out = tmp_path / "ts"
    assert main(TIMESERIES + ["--methods", "exact", "--out", str(out)]) == EXIT_OK
    lines = (tmp_path / "ts.csv").read_text().splitlines()
    assert lines[0] == "t_over_Tpi,t_absolute,method,f_state,F_op"
    assert len(lines) == 3
    table = pd.read_csv(tmp_path / "ts.csv")
    assert list(table["t_over_Tpi"]) == [0.5, 1.0]
    assert (table["f_state"] == 1.0).all() and (table["F_op"] == 1.0).all()
    manifest = read_manifest(tmp_path / "ts.manifest.json")
    assert manifest["command"] == "timeseries"
    assert manifest["methods"] == ["exact"]
    assert manifest["grid"]["samples"] == 2
    summary = manifest["summary"]["exact"]
    assert summary["F_op_mean"] == pytest.approx(1.0, abs=1e-12)
    assert {"f_state_min", "f_state_final", "F_op_max"} <= set(summary)


def test_timeseries_output_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(TIMESERIES + ["--methods", "rwa-full,chrw", "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_timeseries_from_config_file(tmp_path):
    config = tmp_path / "run.json"
    config.write_text('{"spin": 1, "methods": "rwa-reduced", "samples": 3, "t_max_pi": 0.5}')
    assert main(["timeseries", "--config", str(config), "--out", str(tmp_path / "c")]) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "c.csv")) == 3


def test_every_method_failing_is_exit_one(tmp_path):
    args = ["timeseries", "--spin", "5/2", "--B0", "0", "--B1", "0.1", "--omega", "1", "--methods", "chrw",
            "--samples", "2", "--t-max-pi", "0.5", "--out", str(tmp_path / "f")]
    assert main(args) == EXIT_FAILURE
    manifest = read_manifest(tmp_path / "f.manifest.json")
    assert any("chrw" in w for w in manifest["warnings"])
    assert pd.read_csv(tmp_path / "f.csv")["F_op"].isna().all()


@pytest.mark.parametrize("args", [
    ["timeseries", "--methods", "magnus"],
    ["timeseries", "--spin", "1", "--B1", "0", "--omega", "1", "--samples", "2"],
    ["timeseries", "--dt", "0.5", "--samples", "2", "--methods", "exact"],
    ["timeseries", "--no-such-flag"],
    ["sweep", "--vary", "B0"],
    [],
])
def test_usage_errors_exit_two(tmp_path, monkeypatch, args):
    monkeypatch.chdir(tmp_path)
    assert main(args) == EXIT_USAGE


def test_sweep_rows(tmp_path):
    assert main(SWEEP + ["--out", str(tmp_path / "sw")]) == EXIT_OK
    table = pd.read_csv(tmp_path / "sw.csv")
    assert list(table.columns) == ["sweep_value", "method", "mean_F_op"]
    assert list(table["sweep_value"]) == [0.9, 0.9, 1.1, 1.1]
    assert list(table["method"]) == ["rwa-reduced", "chrw", "rwa-reduced", "chrw"]
    assert table["mean_F_op"].between(0.0, 1.0).all()
    manifest = read_manifest(tmp_path / "sw.manifest.json")
    assert manifest["grid"]["vary"] == "omega"


def test_sweep_state_metric_over_b1(tmp_path):
    args = ["sweep", "--spin", "1", "--methods", "rwa-full", "--samples", "3", "--window-pi", "1",
            "--vary", "B1", "--from", "0.1", "--to", "0.3", "--points", "3", "--metric", "state",
            "--omega", "1.2", "--out", str(tmp_path / "b1")]
    assert main(args) == EXIT_OK
    table = pd.read_csv(tmp_path / "b1.csv")
    assert "mean_f_state" in table.columns
    assert np.allclose(table["sweep_value"], [0.1, 0.2, 0.3])


def test_parallel_sweep_matches_serial(tmp_path):
    assert main(SWEEP + ["--out", str(tmp_path / "serial")]) == EXIT_OK
    assert main(SWEEP + ["--parallel", "2", "--out", str(tmp_path / "parallel")]) == EXIT_OK
    assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "parallel.csv").read_bytes()


def test_check_names_are_unique():
    names = [check.name for check in CHECKS]
    assert len(names) == len(set(names))


@pytest.mark.slow
def test_quick_selftest_passes():
    report = run_checks(seed=0, quick=True)
    assert (report["status"] == "PASS").all(), report.to_string()
    assert main(["selftest", "--quick"]) == EXIT_OK
