"""Utilities processes."""

import math

import numpy as np

from ..const import ERROR_NO_CROSSING, FLOAT_FORMAT, ONE_OVER_E
from ..exceptions import InvalidParameterError, NoCrossingError


def reverse_envelope(magnitudes) -> np.ndarray:
    """Return the running maximum taken from the end of the series."""
    return np.maximum.accumulate(np.asarray(magnitudes, dtype=float)[::-1])[::-1]


def crossing_time(times, magnitudes, level: float = ONE_OVER_E) -> float:
    """Return the first log-linear crossing of level."""
    times = np.asarray(times, dtype=float)
    magnitudes = np.asarray(magnitudes, dtype=float)
    if times.shape != magnitudes.shape or times.size < 2:
        raise InvalidParameterError("need at least two matching samples")
    if magnitudes[0] <= level:
        raise InvalidParameterError(
            f"first sample {magnitudes[0]:.6g} is not above {level:.6g}"
        )
    below = np.flatnonzero(magnitudes <= level)
    if below.size == 0:
        raise NoCrossingError(ERROR_NO_CROSSING % f"t={times[-1]:.6g}")
    index = below[0]
    upper, lower = magnitudes[index - 1], magnitudes[index]
    if lower <= 0:
        fraction = (upper - level) / (upper - lower)
    else:
        fraction = (math.log(upper) - math.log(level)) / (
            math.log(upper) - math.log(lower)
        )
    return float(times[index - 1] + fraction * (times[index] - times[index - 1]))


def format_float(value: float | None) -> str:
    """Format a float with 17 significant digits."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return FLOAT_FORMAT.format(value)


def stable_sum(values) -> float:
    """Return the correctly rounded sum."""
    return math.fsum(values)


def stable_complex_sum(values) -> complex:
    """Return the correctly rounded sum of complex values."""
    values = np.asarray(values, dtype=complex)
    return complex(math.fsum(values.real), math.fsum(values.imag))
