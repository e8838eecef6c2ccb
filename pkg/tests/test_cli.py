"""Test the command line."""

import logging
import math

import numpy as np
import pytest
import yaml

from telegraph_spin import VERSION
from telegraph_spin.cli import EXIT_ERROR, EXIT_OK, EXIT_TOLERANCE, main
from telegraph_spin.helpers.filemgmt import read_table, write_table

from .const import SEED, T2_PREDICTED_US
from .helpers.utils import data_file

ZERO_FIELD_CONFIG = {
    "lindblad": {"zfs_mhz": 0.0, "field_gauss": 0.0},
    "times": {"n_times": 31},
}


def _write_config(tmp_path, data: dict) -> str:
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf8")
    return str(path)


def test_version(capsys) -> None:
    """Test --version."""
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert VERSION in capsys.readouterr().out


def test_parse_seq_error_column(capsys) -> None:
    """Test a syntax error is reported with its column."""
    assert main(["parse-seq", "(pi)_q"]) == EXIT_ERROR
    assert "column 6" in capsys.readouterr().err


def test_parse_seq_report(capsys) -> None:
    """Test the canonical form and the decoupling advisory."""
    assert main(["parse-seq", "CPMG(4)", "--tau-ns", "200"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "canonical: CPMG(4)" in out
    assert "pulses: 4" in out
    assert "DD_MARGINAL" in out


def test_parse_seq_export(tmp_path, capsys) -> None:
    """Test --export writes the expanded schedule."""
    target = tmp_path / "cpmg2.txt"
    assert (
        main(["parse-seq", "CPMG(2)", "--tau-ns", "1000", "--export", str(target)]) == EXIT_OK
    )
    capsys.readouterr()
    assert target.read_text(encoding="utf8") == data_file("schedule_cpmg2.txt").read_text(
        encoding="utf8"
    )


def test_parse_seq_needs_text() -> None:
    """Test parse-seq without a sequence is a usage error."""
    with pytest.raises(SystemExit) as exc:
        main(["parse-seq"])
    assert exc.value.code == 2


def test_decay_analytic(tmp_path) -> None:
    """Test a free analytic decay table and its metadata."""
    target = tmp_path / "decay.csv"
    assert main(["decay", "--n-times", "21", "--out", str(target)]) == EXIT_OK
    meta, columns = read_table(target)
    assert meta["version"] == VERSION
    assert meta["command"] == "decay"
    assert meta["engine"] == "analytic"
    assert meta["config"]["model"]["t1_us"] == 10.0
    assert len(columns["t_us"]) == 21
    assert columns["t_us"][0] == 0.0
    assert columns["abs"][0] == pytest.approx(1.0)
    assert all(value <= 1.0 + 1e-12 for value in columns["abs"])


def test_decay_all_engines(tmp_path) -> None:
    """Test --engine all writes one table per engine."""
    config = _write_config(tmp_path, ZERO_FIELD_CONFIG)
    target = tmp_path / "decay.csv"
    argv = ["decay", "--config", config, "--engine", "all", "--seed", str(SEED)]
    argv += ["--traj", "200", "--out", str(target)]
    assert main(argv) == EXIT_OK
    for engine in ("analytic", "mc", "lindblad"):
        meta, columns = read_table(tmp_path / f"decay_{engine}.csv")
        assert meta["engine"] == engine
        assert len(columns["t_us"]) == 31
    assert not target.exists()


def test_decay_mc_needs_seed(capsys) -> None:
    """Test the mc engine without a seed is rejected."""
    assert main(["decay", "--engine", "mc"]) == EXIT_ERROR
    assert "stochastic.seed" in capsys.readouterr().err


def test_decay_config_and_flag(tmp_path) -> None:
    """Test flags override values from the configuration file."""
    target = tmp_path / "decay.csv"
    argv = ["decay", "--config", str(data_file("config_base.yaml"))]
    argv += ["--t1", "7.5", "--out", str(target)]
    assert main(argv) == EXIT_OK
    meta, columns = read_table(target)
    assert meta["config"]["model"]["t1_us"] == 7.5
    assert meta["config"]["model"]["levels"] == 3
    assert meta["config"]["sequence"]["macro"] == "KDD"
    # sample at every KDD cycle end
    assert len(columns["t_us"]) == 5


def test_decay_rerun_from_output(tmp_path) -> None:
    """Test an output table reproduces its own run."""
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    argv = ["decay", "--levels", "3", "--init", "0", "--n-times", "11"]
    assert main([*argv, "--out", str(first)]) == EXIT_OK
    assert main(["decay", "--config", str(first), "--out", str(second)]) == EXIT_OK
    meta_first, columns_first = read_table(first)
    meta_second, columns_second = read_table(second)
    assert meta_second["config"]["model"] == meta_first["config"]["model"]
    assert columns_second == columns_first


def test_decay_fit_metadata(tmp_path) -> None:
    """Test --fit records the fit in the output metadata."""
    target = tmp_path / "decay.json"
    argv = ["decay", "--fit", "1/e", "--format", "json", "--out", str(target)]
    assert main(argv) == EXIT_OK
    meta, _ = read_table(target)
    assert len(meta["fits"]) == 1
    assert meta["fits"][0]["model"] == "1/e"
    assert meta["fits"][0]["params"]["t"] > 0


def test_sweep_default_curves(tmp_path) -> None:
    """Test the sweep reproduces the engineered-experiment T2."""
    target = tmp_path / "sweep.csv"
    assert main(["sweep", "--tau-list-ns", "200,600", "--out", str(target)]) == EXIT_OK
    meta, columns = read_table(target)
    assert columns["tau_ns"] == [200.0, 600.0]
    assert columns["2lf_t2_us"][0] == pytest.approx(T2_PREDICTED_US, rel=0.02)
    assert set(meta["free_t2star_us"]) == {"2lf", "3lf_dq", "3lf_sq"}
    assert "3lf_sq_flag" in columns


def test_sweep_curves_file(tmp_path, caplog) -> None:
    """Test an invalid curve is skipped with a warning."""
    target = tmp_path / "sweep.csv"
    argv = ["sweep", "--curves", str(data_file("curves.yaml")), "--out", str(target)]
    with caplog.at_level(logging.WARNING):
        assert main(argv) == EXIT_OK
    assert "Invalid entry skipped" in caplog.text
    _, columns = read_table(target)
    assert "2lf_t2_us" in columns
    assert "3lf_dq_t2_us" in columns
    assert "3lf_sq_t2_us" in columns
    assert "broken_t2_us" not in columns


def test_traces_generate_and_replay(tmp_path) -> None:
    """Test a replayed ensemble has the hash of the generated one."""
    traces_file = tmp_path / "ensemble.jsonl"
    generated = tmp_path / "generated.csv"
    replayed = tmp_path / "replayed.csv"
    common = ["traces", "--traces-file", str(traces_file), "--n-traces", "50"]
    assert main([*common, "--seed", str(SEED), "--out", str(generated)]) == EXIT_OK
    assert traces_file.exists()
    assert main([*common, "--replay", "--out", str(replayed)]) == EXIT_OK
    meta_generated, columns_generated = read_table(generated)
    meta_replayed, columns_replayed = read_table(replayed)
    assert meta_replayed["hash"] == meta_generated["hash"]
    assert meta_generated["ensemble"]["n_traces"] == 50
    assert columns_replayed == columns_generated
    assert columns_generated["population_difference"][0] == pytest.approx(1.0)


def test_traces_need_seed(capsys) -> None:
    """Test generating traces without a seed is rejected."""
    assert main(["traces", "--n-traces", "5"]) == EXIT_ERROR
    assert "stochastic.seed" in capsys.readouterr().err


def test_traces_replay_needs_file() -> None:
    """Test --replay without --traces-file is a usage error."""
    with pytest.raises(SystemExit) as exc:
        main(["traces", "--replay"])
    assert exc.value.code == 2


def test_compare_within_tolerance(tmp_path) -> None:
    """Test analytic and Lindblad agree within the default tolerance."""
    config = _write_config(tmp_path, ZERO_FIELD_CONFIG)
    target = tmp_path / "compare.csv"
    argv = ["compare", "--config", config, "--engines", "analytic,lindblad"]
    assert main([*argv, "--out", str(target)]) == EXIT_OK
    meta, columns = read_table(target)
    assert meta["engines"] == ["analytic", "lindblad"]
    assert columns["pair"] == ["analytic-lindblad"]
    assert columns["status"] == ["ok"]
    assert columns["max_abs_dev"][0] < 1e-3


def test_compare_tolerance_exceeded(tmp_path, caplog) -> None:
    """Test an impossible tolerance gives the tolerance exit code."""
    config = _write_config(tmp_path, ZERO_FIELD_CONFIG)
    target = tmp_path / "compare.csv"
    argv = ["compare", "--config", config, "--engines", "analytic,lindblad"]
    argv += ["--tolerance", "1e-300", "--out", str(target)]
    with caplog.at_level(logging.ERROR):
        assert main(argv) == EXIT_TOLERANCE
    assert "deviate by" in caplog.text
    _, columns = read_table(target)
    assert columns["status"] == ["exceeded"]


def test_compare_needs_two_engines() -> None:
    """Test compare with one engine is a usage error."""
    with pytest.raises(SystemExit) as exc:
        main(["compare", "--engines", "analytic"])
    assert exc.value.code == 2


def test_compare_mc_needs_seed() -> None:
    """Test compare with mc and no seed is a usage error."""
    with pytest.raises(SystemExit) as exc:
        main(["compare", "--engines", "analytic,mc"])
    assert exc.value.code == 2


def test_fit_one_over_e(tmp_path, capsys) -> None:
    """Test the 1/e time of a tabulated exponential."""
    table = tmp_path / "decay.csv"
    times = np.linspace(0.0, 50.0, 501)
    write_table(table, {"t_us": times, "abs": np.exp(-times / 12.5)}, {"command": "decay"})
    assert main(["fit", str(table), "--model", "1/e"]) == EXIT_OK
    report = yaml.safe_load(capsys.readouterr().out)
    assert report[0]["model"] == "1/e"
    assert report[0]["params"]["t"] == pytest.approx(12.5, rel=1e-3)


def test_fit_exponential_to_file(tmp_path) -> None:
    """Test an exponential fit report written with --out."""
    table = tmp_path / "decay.csv"
    target = tmp_path / "fit.yaml"
    times = np.linspace(0.0, 40.0, 41)
    write_table(table, {"t_us": times, "abs": np.exp(-times / 12.5)}, {"command": "decay"})
    assert main(["fit", str(table), "--out", str(target)]) == EXIT_OK
    report = yaml.safe_load(target.read_text(encoding="utf8"))
    assert report[0]["model"] == "exp"
    assert report[0]["converged"] is True
    assert report[0]["params"]["t"] == pytest.approx(12.5, rel=1e-6)


def test_fit_missing_column(tmp_path, capsys) -> None:
    """Test fitting a column the table does not have."""
    table = tmp_path / "decay.csv"
    write_table(table, {"t_us": [0.0, 1.0], "re": [1.0, 0.5]}, {"command": "decay"})
    assert main(["fit", str(table)]) == EXIT_ERROR
    assert "no column 'abs'" in capsys.readouterr().err


def test_fit_joint(tmp_path) -> None:
    """Test the joint T1/T2* comparison picks the generating ratio."""
    times = np.linspace(0.0, 60.0, 61)
    t1_table = tmp_path / "t1.csv"
    t2_table = tmp_path / "t2.csv"
    target = tmp_path / "joint.csv"
    write_table(
        t1_table,
        {"t_us": times, "population_difference": np.exp(-times / 10.0)},
        {"command": "traces"},
    )
    write_table(t2_table, {"t_us": times, "abs": np.exp(-times / 20.0)}, {"command": "decay"})
    argv = ["fit", str(t1_table), "--t2-table", str(t2_table), "--out", str(target)]
    assert main(argv) == EXIT_OK
    meta, columns = read_table(target)
    assert meta["tables"] == [str(t1_table), str(t2_table)]
    assert columns["model"] == [1.0, 2.0, 3.0, 4.0]
    assert math.isnan(columns["ratio"][3])
    best = min(range(3), key=lambda index: columns["mse"][index])
    assert columns["model"][best] == 2.0
    assert columns["t1_us"][best] == pytest.approx(10.0, rel=1e-3)


def test_sweep_mc_points(tmp_path) -> None:
    """Test the sweep adds Monte Carlo points when the mc engine is selected."""
    curves = tmp_path / "curves.yaml"
    curves.write_text(yaml.safe_dump([{"name": "2lf", "levels": 2}]), encoding="utf8")
    target = tmp_path / "sweep.csv"
    argv = ["sweep", "--curves", str(curves), "--tau-list-ns", "200"]
    argv += ["--engine", "mc", "--seed", str(SEED), "--traj", "2000", "--out", str(target)]
    assert main(argv) == EXIT_OK
    _, columns = read_table(target)
    assert columns["2lf_t2_us"][0] == pytest.approx(T2_PREDICTED_US, rel=0.02)
    assert columns["2lf_mc_t2_us"][0] == pytest.approx(columns["2lf_t2_us"][0], rel=0.2)
