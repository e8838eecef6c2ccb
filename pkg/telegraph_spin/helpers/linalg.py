"""Small dense complex linear algebra."""

import logging
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..const import CONDITION_THRESHOLD, ERROR_MATRIX, MAX_EXPM_DIM
from ..exceptions import InvalidParameterError

_LOGGER = logging.getLogger(__name__)


def _check_square(m) -> np.ndarray:
    matrix = np.asarray(m, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParameterError(ERROR_MATRIX % f"shape {matrix.shape} is not square")
    if matrix.shape[0] > MAX_EXPM_DIM:
        raise InvalidParameterError(ERROR_MATRIX % f"dimension {matrix.shape[0]}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidParameterError(ERROR_MATRIX % "non-finite entries")
    return matrix


def mat_exp(m, t: float) -> np.ndarray:
    """Return exp(m * t)."""
    if not np.isfinite(t):
        raise InvalidParameterError(ERROR_MATRIX % f"non-finite time {t}")
    scaled = _check_square(m) * t
    eigenvalues, vectors = np.linalg.eig(scaled)
    condition = np.linalg.cond(vectors)
    if condition < CONDITION_THRESHOLD:
        return np.linalg.solve(vectors.T, (vectors * np.exp(eigenvalues)).T).T
    _LOGGER.debug("mat_exp falling back to Pade, condition %.3g", condition)
    return scipy.linalg.expm(scaled)


@dataclass(frozen=True, eq=False)
class ModalExpansion:
    """x(s) = V diag(exp(s * log_eigenvalues)) V^-1 x0 for a fixed matrix and x0."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray
    condition: float

    @property
    def well_conditioned(self) -> bool:
        """Return True when the eigenvector basis is usable."""
        return self.condition < CONDITION_THRESHOLD

    @property
    def coefficients(self) -> np.ndarray:
        """Return the contribution of each mode to the first component."""
        return self.vectors[0] * self.weights

    def first_component(self, powers: np.ndarray) -> np.ndarray:
        """Return sum_i c_i * powers[..., i]."""
        return powers @ self.coefficients

    def state(self, powers: np.ndarray) -> np.ndarray:
        """Return the full state for a single row of modal powers."""
        return self.vectors @ (powers * self.weights)


def modal_expansion(m, x0) -> ModalExpansion:
    """Diagonalise m and project x0 onto its eigenvectors."""
    matrix = _check_square(m)
    eigenvalues, vectors = np.linalg.eig(matrix)
    condition = float(np.linalg.cond(vectors))
    if condition < CONDITION_THRESHOLD:
        weights = np.linalg.solve(vectors, np.asarray(x0, dtype=complex))
    else:
        weights = np.full(matrix.shape[0], np.nan, dtype=complex)
    return ModalExpansion(eigenvalues, vectors, weights, condition)


class PropagatorCache:
    """exp(m * duration) keyed by duration rounded to 1e-12 us."""

    def __init__(self, m) -> None:
        """Initialise the cache."""
        self._matrix = _check_square(m)
        self._cache: dict[float, np.ndarray] = {}

    def __call__(self, duration: float) -> np.ndarray:
        """Return the propagator for duration."""
        key = round(float(duration), 12)
        if key not in self._cache:
            self._cache[key] = mat_exp(self._matrix, key)
        return self._cache[key]

    def __len__(self) -> int:
        """Return the number of cached propagators."""
        return len(self._cache)


def propagate_piecewise(
    x0: np.ndarray,
    pulse_times: Sequence[float],
    pulse_matrices: Sequence[np.ndarray],
    sample_times: Sequence[float],
    propagator: Callable[[float], np.ndarray],
) -> Iterator[np.ndarray]:
    """Yield the state at each sample time.

    The state evolves with propagator(duration) between instantaneous pulses.
    A pulse at the same time as a sample is applied before the sample is taken.
    """
    state = np.asarray(x0, dtype=complex)
    now = 0.0
    pulse_index = 0
    for sample in sample_times:
        while pulse_index < len(pulse_times) and pulse_times[pulse_index] <= sample:
            target = pulse_times[pulse_index]
            if target > now:
                state = propagator(target - now) @ state
                now = target
            state = pulse_matrices[pulse_index] @ state
            pulse_index += 1
        if sample > now:
            state = propagator(sample - now) @ state
            now = sample
        yield state
