"""Differential Ramsey readout with level-dependent common-mode errors."""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ..classes.fluctuator import FluctuatorParams
from ..classes.results import DecayCurve
from ..classes.schedule import PulseSchedule
from ..const import DEFAULT_COMMON_MODE, EQUILIBRIUM, Engine
from ..exceptions import InvalidParameterError
from .analytic import propagate_schedule
from .model import InitState, static_params
from .stochastic import mc_coherence

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class RamseyConfig:
    """Ramsey durations, detuning (rad/us) and second pi/2 phases."""

    times: tuple[float, ...]
    detuning: float = 0.0
    phases: tuple[float, ...] = (0.0, math.pi)
    schedule: PulseSchedule | None = None

    def __post_init__(self):
        """Check the phases."""
        for phase in self.phases:
            if phase not in (0.0, math.pi):
                raise InvalidParameterError(
                    f"second pi/2 phase must be 0 or pi, got {phase}"
                )
        if len(self.times) == 0:
            raise InvalidParameterError("Ramsey duration grid is empty")


@dataclass(frozen=True)
class ReadoutErrorModel:
    """Common-mode signal added for each final fluctuator level."""

    amplitudes: Mapping[int, float] = field(default_factory=dict)

    @classmethod
    def default(cls, level_set, original_level: int) -> "ReadoutErrorModel":
        """Assign the default amplitudes to the non-original levels in order."""
        others = [level for level in level_set if level != original_level]
        return cls(dict(zip(others, DEFAULT_COMMON_MODE)))

    def amplitude(self, level: int) -> float:
        """Return the amplitude for level."""
        return self.amplitudes.get(level, 0.0)


def _analytic_terms(params, init_state, config):
    schedule = config.schedule or PulseSchedule.free(config.times[-1])
    vectors = propagate_schedule(params, init_state, schedule, config.times)
    statics = propagate_schedule(static_params(params), init_state, schedule, config.times)
    coherence = {
        level: np.array([vector.occupancies()[level] for vector in vectors])
        for level in params.level_set
    }
    populations = {
        level: np.array([vector.occupancies()[level].real for vector in statics])
        for level in params.level_set
    }
    return coherence, populations


def _mc_terms(params, init_state, config, n_traj, seed):
    schedule = config.schedule or PulseSchedule.free(config.times[-1])
    result = mc_coherence(params, init_state, schedule, n_traj, seed, config.times)
    return dict(result.by_level), dict(result.occupancy)


def differential_signal(
    params: FluctuatorParams,
    ramsey_config: RamseyConfig,
    readout_error_model: ReadoutErrorModel | None = None,
    init_state: InitState = -1,
    engine: Engine | str = Engine.ANALYTIC,
    n_traj: int = 10000,
    seed: int | None = None,
) -> DecayCurve:
    """Return both raw Ramsey signals and their difference.

    Only trajectories that end in the original level carry the fringe; every
    trajectory adds its level's common-mode amplitude. Free evolution is
    viewed in the frame resonant with the original level.
    """
    if init_state == EQUILIBRIUM:
        raise InvalidParameterError("differential readout needs a definite initial level")
    original = int(init_state)
    if readout_error_model is None:
        readout_error_model = ReadoutErrorModel.default(params.level_set, original)
    times = np.asarray(ramsey_config.times, dtype=float)
    if Engine(engine) == Engine.MC:
        coherence, populations = _mc_terms(params, init_state, ramsey_config, n_traj, seed)
    else:
        coherence, populations = _analytic_terms(params, init_state, ramsey_config)
    conditioned = coherence[original]
    if ramsey_config.schedule is None:
        conditioned = conditioned * np.exp(-1j * params.velocity(original) * times)
    common = sum(
        populations[level] * (0.5 + readout_error_model.amplitude(level))
        for level in params.level_set
    )
    rotated = np.exp(1j * ramsey_config.detuning * times) * conditioned
    signals = {
        phase: common + 0.5 * np.real(np.exp(1j * phase) * rotated)
        for phase in ramsey_config.phases
    }
    columns = {f"s_{round(math.degrees(phase))}": value for phase, value in signals.items()}
    if len(signals) == 2:
        columns["difference"] = signals[0.0] - signals[math.pi]
    columns["total_abs"] = np.abs(sum(coherence.values()))
    _LOGGER.debug("differential_signal: %s samples, engine %s", times.size, engine)
    return DecayCurve(
        t=times,
        coherence=conditioned,
        engine=str(Engine(engine)),
        provenance={
            "levels": params.levels,
            "gamma": params.gamma,
            "v": params.v,
            "detuning": ramsey_config.detuning,
            "common_mode": dict(readout_error_model.amplitudes),
        },
        columns=columns,
    )
