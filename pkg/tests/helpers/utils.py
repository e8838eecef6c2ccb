"""Utilities for telegraph_spin testing."""

import shutil
from pathlib import Path

import numpy as np

from ..const import TEST_DATA_LOCATION


def data_file(name: str) -> Path:
    """Return the path of a file under tests/data."""
    return TEST_DATA_LOCATION.joinpath(name)


def copy_data_file(tmp_path: Path, name: str) -> Path:
    """Copy a data file into tmp_path and return the copy."""
    target = tmp_path / name
    shutil.copy(data_file(name), target)
    return target


def check_file_contents(path: Path, name: str):
    """Compare a written file with its golden copy."""
    with open(path, encoding="utf8") as file:
        created = file.read()
    with open(data_file(name), encoding="utf8") as file:
        compare = file.read()
    assert created == compare


def max_abs_difference(first, second) -> float:
    """Return max |first - second|."""
    return float(np.max(np.abs(np.asarray(first) - np.asarray(second))))


def relative_error(value: float, expected: float) -> float:
    """Return |value - expected| / |expected|."""
    return abs(value - expected) / abs(expected)
