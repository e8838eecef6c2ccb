"""File management processes."""

import csv
import io
import json
import logging
import math
from pathlib import Path

import numpy as np
import yaml
from voluptuous.error import Error as VoluptuousError

from ..classes.results import FitResult
from ..classes.schedule import PulseSchedule
from ..classes.trace import RtnTrace, TraceEnsemble
from ..const import DOMAIN, ERROR_CORRUPT_FILE, FLOAT_FORMAT, WARN_SKIPPED_ENTRY
from ..engines.stochastic import ensemble_records
from ..exceptions import ConfigValidationError, CorruptFileError, InvalidParameterError
from ..sequence.expand import export_schedule, parse_schedule_text
from .utils import format_float

_LOGGER = logging.getLogger(__name__)

CONFIG_PREFIX = "# config: "
VERSION_PREFIX = f"# {DOMAIN} "


def load_yaml_file(path, item_schema) -> list:
    """Load a YAML list, keeping the entries that validate."""
    items = []
    try:
        with open(path, encoding="utf8") as file:
            data = yaml.safe_load(file)
    except FileNotFoundError:
        return []
    if data is None:
        return []
    if not isinstance(data, list):
        raise ConfigValidationError(str(path), "expected a list of entries")
    for item in data:
        try:
            items.append(item_schema(item))
        except VoluptuousError as exception:
            # keep going
            _LOGGER.warning(WARN_SKIPPED_ENTRY, path, exception)
    return items


def _embedded_csv_config(path: Path) -> dict:
    with open(path, encoding="utf8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.startswith("#"):
                break
            if line.startswith(CONFIG_PREFIX):
                try:
                    return json.loads(line[len(CONFIG_PREFIX) :])
                except json.JSONDecodeError as err:
                    raise CorruptFileError(path, line_number, str(err)) from err
    raise CorruptFileError(path, 1, "no embedded configuration")


def read_config_file(path) -> dict:
    """Read a YAML run configuration, or the configuration embedded in an output file."""
    path = Path(path)
    if path.suffix == ".csv":
        return _embedded_csv_config(path)
    if path.suffix == ".json":
        meta, _ = read_table(path)
        if "config" not in meta:
            raise CorruptFileError(path, 1, "no embedded configuration")
        return meta["config"]
    with open(path, encoding="utf8") as file:
        try:
            data = yaml.safe_load(file)
        except yaml.YAMLError as err:
            line = getattr(getattr(err, "problem_mark", None), "line", 0) + 1
            raise CorruptFileError(path, line, str(err)) from err
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigValidationError("<root>", "expected a mapping of sections")
    return data


def _column_values(values) -> list:
    if isinstance(values, np.ndarray) and values.dtype.kind in "fiu":
        return [float(value) for value in values]
    return list(values)


def _cell(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, int, np.floating, np.integer)):
        return format_float(float(value))
    text = str(value)
    if "\n" in text or "\r" in text:
        raise InvalidParameterError(f"table cell {text!r} spans lines")
    return text


def _csv_line(cells) -> str:
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerow(cells)
    return buffer.getvalue()[:-1]


def _csv_cells(line: str, path, line_number: int) -> list[str]:
    try:
        return next(csv.reader([line], strict=True))
    except csv.Error as err:
        raise CorruptFileError(path, line_number, str(err)) from err


def table_text(table: dict, meta: dict, output_format: str = "csv") -> str:
    """Return a table as CSV with comment headers, or as a JSON document."""
    columns = list(table)
    rows = list(zip(*(_column_values(table[name]) for name in columns), strict=True))
    if output_format == "json":
        document = {
            "meta": meta,
            "columns": columns,
            "rows": [
                [
                    None if isinstance(cell, float) and math.isnan(cell) else cell
                    for cell in row
                ]
                for row in rows
            ],
        }
        return json.dumps(document, indent=1) + "\n"
    lines = [f"{VERSION_PREFIX}{meta.get('version', '')}"]
    if "config" in meta:
        lines.append(CONFIG_PREFIX + json.dumps(meta["config"], sort_keys=True))
    lines.extend(
        f"# {key}: {json.dumps(value, sort_keys=True)}"
        for key, value in meta.items()
        if key not in ("version", "config")
    )
    lines.append(_csv_line(columns))
    lines.extend(_csv_line(_cell(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_table(path, table: dict, meta: dict, output_format: str = "csv"):
    """Write a table to path."""
    with open(path, "w", encoding="utf8") as out:
        out.write(table_text(table, meta, output_format))
    _LOGGER.debug("Wrote %s rows to %s", len(next(iter(table.values()), [])), path)


def _parse_cell(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path) -> tuple[dict, dict]:
    """Read a table written by write_table; return (meta, columns)."""
    path = Path(path)
    with open(path, encoding="utf8") as file:
        text = file.read()
    if path.suffix == ".json":
        try:
            document = json.loads(text)
            columns = document["columns"]
            rows = document["rows"]
        except (json.JSONDecodeError, KeyError, TypeError) as err:
            raise CorruptFileError(path, 1, str(err)) from err
        transposed = list(zip(*rows, strict=True)) if rows else [()] * len(columns)
        values = {
            name: [math.nan if cell is None else cell for cell in column]
            for name, column in zip(columns, transposed, strict=True)
        }
        return document.get("meta", {}), values
    meta = {}
    header = None
    data = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if line.startswith(VERSION_PREFIX):
            meta["version"] = line[len(VERSION_PREFIX) :]
        elif line.startswith("# ") and ": " in line:
            key, value = line[2:].split(": ", 1)
            try:
                meta[key] = json.loads(value)
            except json.JSONDecodeError as err:
                raise CorruptFileError(path, line_number, str(err)) from err
        elif not line.strip():
            continue
        elif header is None:
            header = _csv_cells(line, path, line_number)
        else:
            cells = _csv_cells(line, path, line_number)
            if len(cells) != len(header):
                raise CorruptFileError(
                    path, line_number, f"expected {len(header)} cells, got {len(cells)}"
                )
            data.append([_parse_cell(cell) for cell in cells])
    if header is None:
        raise CorruptFileError(path, 1, "no column header")
    columns = {name: [row[index] for row in data] for index, name in enumerate(header)}
    return meta, columns


def write_traces(path, ensemble: TraceEnsemble):
    """Write an ensemble as line-delimited JSON."""
    with open(path, "w", encoding="utf8") as out:
        for line in ensemble_records(ensemble):
            out.write(line + "\n")
    _LOGGER.debug("Wrote %s traces to %s", ensemble.n_traces, path)


def read_traces(path) -> TraceEnsemble:
    """Read an ensemble written by write_traces."""
    header = None
    traces = []
    with open(path, encoding="utf8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                kind = record.pop("type")
                if kind == "ensemble":
                    header = record
                elif kind == "trace":
                    traces.append(RtnTrace.from_record(record))
                else:
                    raise ValueError(f"unknown record type '{kind}'")
            except (
                json.JSONDecodeError,
                AttributeError,
                KeyError,
                TypeError,
                ValueError,
            ) as err:
                _LOGGER.debug(ERROR_CORRUPT_FILE, path, line_number, err)
                raise CorruptFileError(path, line_number, str(err)) from err
    if header is None:
        raise CorruptFileError(path, 1, "missing ensemble header")
    if header["n_traces"] != len(traces):
        raise CorruptFileError(
            path, line_number, f"header announces {header['n_traces']} traces, found {len(traces)}"
        )
    return TraceEnsemble(
        traces=tuple(traces),
        t_p=header["t_p"],
        horizon=header["horizon"],
        seed=header["seed"],
        t1_target=header["t1_target"],
        n_discarded=header["n_discarded"],
        n_merged=header["n_merged"],
    )


def fit_report_text(fits: list[FitResult]) -> str:
    """Return fit reports as YAML with fixed field order."""
    return yaml.safe_dump(
        [fit.as_dict() for fit in fits], sort_keys=False, default_flow_style=False
    )


def write_fit_report(path, fits: list[FitResult]):
    """Write the fit report file."""
    with open(path, "w", encoding="utf8") as out:
        out.write(fit_report_text(fits))


def density_text(rho) -> str:
    """Return 'dim N' then N rows of real/imaginary pairs."""
    rho = np.asarray(rho, dtype=complex)
    lines = [f"dim {rho.shape[0]}"]
    for row in rho:
        lines.append(
            " ".join(
                f"{FLOAT_FORMAT.format(value.real)} {FLOAT_FORMAT.format(value.imag)}"
                for value in row
            )
        )
    return "\n".join(lines) + "\n"


def parse_density_text(text: str, path="<string>") -> np.ndarray:
    """Read a density matrix written by density_text."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("dim "):
        raise CorruptFileError(path, 1, "expected 'dim N'")
    try:
        dim = int(lines[0].split()[1])
    except (IndexError, ValueError) as err:
        raise CorruptFileError(path, 1, str(err)) from err
    if len(lines) != dim + 1:
        raise CorruptFileError(path, len(lines), f"expected {dim} rows")
    rho = np.zeros((dim, dim), dtype=complex)
    for index, line in enumerate(lines[1:]):
        try:
            values = [float(cell) for cell in line.split()]
        except ValueError as err:
            raise CorruptFileError(path, index + 2, str(err)) from err
        if len(values) != 2 * dim:
            raise CorruptFileError(path, index + 2, f"expected {2 * dim} values")
        rho[index] = np.array(values[0::2]) + 1j * np.array(values[1::2])
    return rho


def read_density(path) -> np.ndarray:
    """Read a density matrix file."""
    with open(path, encoding="utf8") as file:
        return parse_density_text(file.read(), path)


def write_density(path, rho):
    """Write a density matrix file."""
    with open(path, "w", encoding="utf8") as out:
        out.write(density_text(rho))


def read_schedule(path) -> PulseSchedule:
    """Read a schedule text file."""
    with open(path, encoding="utf8") as file:
        return parse_schedule_text(file.read(), str(path))


def write_schedule(path, schedule: PulseSchedule):
    """Write a schedule text file."""
    with open(path, "w", encoding="utf8") as out:
        out.write(export_schedule(schedule))


def engine_path(path, engine: str) -> Path:
    """Return '<stem>_<engine><suffix>' next to path."""
    path = Path(path)
    return path.with_name(f"{path.stem}_{engine}{path.suffix}")
