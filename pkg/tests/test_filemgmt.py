"""Test file reading and writing."""

import math

import numpy as np
import pytest

from telegraph_spin.engines.stochastic import engineered_traces, ensemble_hash
from telegraph_spin.exceptions import CorruptFileError, InvalidParameterError
from telegraph_spin.helpers.filemgmt import (
    density_text,
    engine_path,
    parse_density_text,
    read_density,
    read_schedule,
    read_table,
    read_traces,
    table_text,
    write_density,
    write_schedule,
    write_table,
    write_traces,
)
from telegraph_spin.sequence.expand import expand
from telegraph_spin.sequence.parser import parse

from .const import SEED, T1_US
from .helpers.utils import check_file_contents, copy_data_file, data_file

META = {"version": "v1.0.0", "config": {"engine": "analytic"}, "command": "decay"}
TABLE = {"t_us": np.array([0.0, 1.0]), "abs": np.array([1.0, 0.5])}


def test_table_golden(tmp_path) -> None:
    """Test the CSV layout."""
    path = tmp_path / "table.csv"
    write_table(path, TABLE, META)
    check_file_contents(path, "table.csv")


def test_read_table() -> None:
    """Test reading the CSV header block and columns."""
    meta, columns = read_table(data_file("table.csv"))
    assert meta == META
    assert columns == {"t_us": [0.0, 1.0], "abs": [1.0, 0.5]}


def test_json_table_nan(tmp_path) -> None:
    """Test NaN cells in the JSON format."""
    path = tmp_path / "table.json"
    write_table(path, {"t2_us": [1.0, math.nan], "flag": ["ok", "no_crossing"]}, META, "json")
    assert '"rows"' in path.read_text(encoding="utf8")
    assert "null" in path.read_text(encoding="utf8")
    meta, columns = read_table(path)
    assert meta == META
    assert columns["t2_us"][0] == 1.0
    assert math.isnan(columns["t2_us"][1])
    assert columns["flag"] == ["ok", "no_crossing"]


def test_csv_cells() -> None:
    """Test formatting of missing, boolean and text cells."""
    text = table_text({"a": [None, True], "b": ["x", 2]}, {"version": "v1.0.0"})
    assert text.splitlines()[-2:] == ["nan,x", "true,2"]


def test_csv_quoted_cells(tmp_path) -> None:
    """Test that text cells with commas and quotes keep their row intact."""
    path = tmp_path / "quoted.csv"
    table = {"curve": ["2lf, strong", 'say "hi"'], "t2_us": [1.0, 2.0]}
    write_table(path, table, {"version": "v1.0.0"})
    assert path.read_text(encoding="utf8").splitlines()[-2] == '"2lf, strong",1'
    _, columns = read_table(path)
    assert columns == table


def test_csv_multiline_cell() -> None:
    """Test that a cell spanning lines is rejected."""
    with pytest.raises(InvalidParameterError, match="spans lines"):
        table_text({"flag": ["a\nb"]}, {"version": "v1.0.0"})


def test_corrupt_quoting(tmp_path) -> None:
    """Test the line number of a row with a stray quote."""
    path = copy_data_file(tmp_path, "table.csv")
    with open(path, "a", encoding="utf8") as file:
        file.write('1,"no"end\n')
    with pytest.raises(CorruptFileError) as err:
        read_table(path)
    assert err.value.line == 7


def test_corrupt_table(tmp_path) -> None:
    """Test the line number of a row with the wrong cell count."""
    path = copy_data_file(tmp_path, "table.csv")
    with open(path, "a", encoding="utf8") as file:
        file.write("2\n")
    with pytest.raises(CorruptFileError) as err:
        read_table(path)
    assert err.value.line == 7


def test_table_without_header(tmp_path) -> None:
    """Test a table with comments only."""
    path = tmp_path / "empty.csv"
    path.write_text("# telegraph_spin v1.0.0\n", encoding="utf8")
    with pytest.raises(CorruptFileError, match="no column header"):
        read_table(path)


def test_traces_round_trip(tmp_path) -> None:
    """Test that a written ensemble reads back unchanged."""
    ensemble = engineered_traces(T1_US, 20, 60.0, 0.044, None, SEED)
    path = tmp_path / "traces.jsonl"
    write_traces(path, ensemble)
    restored = read_traces(path)
    assert restored == ensemble
    assert ensemble_hash(restored) == ensemble_hash(ensemble)


def test_corrupt_traces() -> None:
    """Test the line number of an unreadable trace record."""
    with pytest.raises(CorruptFileError) as err:
        read_traces(data_file("traces_corrupt.jsonl"))
    assert err.value.line == 2


def test_traces_count_mismatch(tmp_path) -> None:
    """Test a header announcing more traces than present."""
    path = tmp_path / "traces.jsonl"
    lines = data_file("traces_corrupt.jsonl").read_text(encoding="utf8").splitlines()
    path.write_text(lines[0] + "\n", encoding="utf8")
    with pytest.raises(CorruptFileError, match="announces 1 traces"):
        read_traces(path)


def test_density_golden(tmp_path) -> None:
    """Test the density matrix layout."""
    rho = np.array([[0.5, 0.5j], [complex(0.0, -0.5), 0.5]])
    path = tmp_path / "density.txt"
    write_density(path, rho)
    check_file_contents(path, "density.txt")
    np.testing.assert_array_equal(read_density(path), rho)


@pytest.mark.parametrize(
    ("text", "line"),
    [
        ("", 1),
        ("dim x\n", 1),
        ("dim 2\n1 0 0 0\n", 2),
        ("dim 1\n1 0 0 0\n", 2),
        ("dim 1\na b\n", 2),
    ],
)
def test_corrupt_density(text, line) -> None:
    """Test unreadable density matrix files."""
    with pytest.raises(CorruptFileError) as err:
        parse_density_text(text, "density.txt")
    assert err.value.line == line


def test_density_text_dimension() -> None:
    """Test the dimension line."""
    assert density_text(np.eye(3) / 3).startswith("dim 3\n")


def test_schedule_file(tmp_path) -> None:
    """Test writing and reading a schedule file."""
    schedule = expand(parse("CPMG(2)"), 1.0)
    path = tmp_path / "schedule.txt"
    write_schedule(path, schedule)
    check_file_contents(path, "schedule_cpmg2.txt")
    assert read_schedule(path) == schedule


def test_engine_path() -> None:
    """Test per-engine output names."""
    assert engine_path("out/run.csv", "mc").as_posix() == "out/run_mc.csv"
