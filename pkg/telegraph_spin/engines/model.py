"""Fluctuator model: parameters, generator matrices and initial vectors."""

import dataclasses
import math

import numpy as np

from ..classes.fluctuator import (
    OCCUPANCY_TO_VECTOR,
    FluctuatorParams,
    GeneratorMatrix,
    ProbVector,
)
from ..const import EQUILIBRIUM, ERROR_INIT_STATE, ERROR_LEVELS, LEVEL_SETS
from ..exceptions import InvalidParameterError
from ..helpers.linalg import mat_exp

InitState = int | str


def make_params(levels: int, t1: float, hyperfine_hz: float) -> FluctuatorParams:
    """Build parameters from a relaxation time (us) and hyperfine coupling (MHz).

    t1 may be math.inf for a static fluctuator.
    """
    if levels not in LEVEL_SETS:
        raise InvalidParameterError(ERROR_LEVELS % levels)
    if math.isnan(t1) or t1 <= 0:
        raise InvalidParameterError(f"t1 must be > 0, got {t1}")
    if not math.isfinite(hyperfine_hz) or hyperfine_hz < 0:
        raise InvalidParameterError(f"hyperfine_hz must be >= 0, got {hyperfine_hz}")
    gamma = 0.0 if math.isinf(t1) else 1.0 / (levels * t1)
    if levels == 2:
        v = math.pi * hyperfine_hz
    else:
        v = 2.0 * math.pi * hyperfine_hz
    return FluctuatorParams(levels=levels, gamma=gamma, v=v)


def generator(params: FluctuatorParams) -> GeneratorMatrix:
    """Return the k=-1 generator in the probability-vector basis."""
    gamma, iv = params.gamma, 1j * params.v
    if params.levels == 2:
        return GeneratorMatrix(np.array([[0, iv], [iv, -2 * gamma]]))
    return GeneratorMatrix(
        np.array(
            [
                [0, 0, iv],
                [2 * gamma, -3 * gamma, iv],
                [0, iv, -3 * gamma],
            ]
        )
    )


def rate_matrix(params: FluctuatorParams) -> np.ndarray:
    """Return the level-occupancy rate matrix (columns sum to zero)."""
    n = params.levels
    rates = np.full((n, n), params.gamma)
    np.fill_diagonal(rates, -params.exit_rate)
    return rates


def occupancy_generator(params: FluctuatorParams) -> np.ndarray:
    """Return the k=-1 generator in the level-occupancy basis."""
    velocities = [params.velocity(level) for level in params.level_set]
    return np.diag(1j * np.array(velocities)) + rate_matrix(params)


def initial_occupancies(params: FluctuatorParams, init_state: InitState) -> np.ndarray:
    """Return level occupancies for a definite level or the equilibrium mixture."""
    level_set = params.level_set
    if init_state == EQUILIBRIUM:
        return np.full(len(level_set), 1.0 / len(level_set))
    if isinstance(init_state, str):
        try:
            init_state = int(init_state)
        except ValueError:
            raise InvalidParameterError(
                ERROR_INIT_STATE % (init_state, params.levels)
            ) from None
    if init_state not in level_set:
        raise InvalidParameterError(ERROR_INIT_STATE % (init_state, params.levels))
    occupancies = np.zeros(len(level_set))
    occupancies[level_set.index(init_state)] = 1.0
    return occupancies


def initial_vector(params: FluctuatorParams, init_state: InitState) -> ProbVector:
    """Return the probability vector at t=0."""
    return ProbVector.from_occupancies(
        params.levels, initial_occupancies(params, init_state)
    )


def static_params(params: FluctuatorParams) -> FluctuatorParams:
    """Return params with zero coupling, the k=0 counterpart of the generator."""
    return dataclasses.replace(params, v=0.0)


def level_populations(
    params: FluctuatorParams, init_state: InitState, t: float
) -> dict[int, float]:
    """Return the probability of occupying each level at time t."""
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t}")
    populations = mat_exp(rate_matrix(params), t) @ initial_occupancies(
        params, init_state
    )
    return {
        level: float(value.real)
        for level, value in zip(params.level_set, populations, strict=True)
    }


def occupancy_basis_change(levels: int) -> np.ndarray:
    """Return the occupancy-to-vector basis change."""
    return np.array(OCCUPANCY_TO_VECTOR[levels])
