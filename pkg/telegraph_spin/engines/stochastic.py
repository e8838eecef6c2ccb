"""Monte Carlo trajectories of the fluctuator and engineered flip traces."""

import cmath
import hashlib
import json
import logging
import math
from collections.abc import Mapping, Sequence

import numpy as np

from ..classes.fluctuator import FluctuatorParams
from ..classes.results import McResult
from ..classes.schedule import PulseSchedule
from ..classes.trace import RtnTrace, TraceEnsemble
from ..const import (
    DEFAULT_TIMES,
    DISCARD_RATE_BOUND,
    DRIVE_SWAPS,
    ENGINEERED_LEVELS,
    ERROR_SCHEDULE_INFEASIBLE,
    ERROR_SCHEDULE_MISMATCH,
    ERROR_TRACE_ATTEMPTS,
    MAX_TRACE_ATTEMPTS_FACTOR,
    MC_BLOCK_SIZE,
    WARN_DISCARD_RATE,
    Drive,
)
from ..exceptions import InvalidParameterError, ScheduleInfeasibleError
from ..helpers.pool import ordered_map
from ..helpers.utils import stable_complex_sum, stable_sum
from .model import InitState, initial_occupancies

_LOGGER = logging.getLogger(__name__)


def _check_seed(seed: int) -> int:
    if seed is None or int(seed) != seed or not 0 <= seed < 2**128:
        raise InvalidParameterError(f"seed must be an integer in [0, 2**128), got {seed}")
    return int(seed)


def stream_generator(seed: int, stream: int) -> np.random.Generator:
    """Return a counter-based generator for one independent stream."""
    return np.random.Generator(
        np.random.Philox(key=_check_seed(seed), counter=int(stream) << 128)
    )


class PhaseMap:
    """Accumulated qubit phase of each trace label under a pulse schedule.

    Labels index level_set. QUBIT pulses toggle the phase sign; other drives
    swap which physical level a label stands for.
    """

    def __init__(
        self,
        schedule: PulseSchedule,
        level_set: Sequence[int],
        velocity_of_level: Mapping[int, float],
    ) -> None:
        """Initialise the map."""
        self.level_set = tuple(level_set)
        index = {level: i for i, level in enumerate(self.level_set)}
        try:
            base = np.array([velocity_of_level[level] for level in self.level_set])
        except KeyError as err:
            raise InvalidParameterError(f"no velocity for level {err}") from None
        pulses = schedule.pulses
        self.breaks = np.concatenate(([0.0], schedule.pulse_centers))
        n_labels, n_intervals = len(self.level_set), len(pulses) + 1
        self.velocity = np.empty((n_labels, n_intervals))
        self.physical = np.empty((n_labels, n_intervals), dtype=int)
        permutation = np.arange(n_labels)
        sign = 1.0
        for interval in range(n_intervals):
            self.velocity[:, interval] = sign * base[permutation]
            self.physical[:, interval] = permutation
            if interval == len(pulses):
                break
            target = Drive(pulses[interval].target)
            if target == Drive.QUBIT:
                sign = -sign
                continue
            first, second = DRIVE_SWAPS[target]
            if first not in index or second not in index:
                raise InvalidParameterError(
                    f"drive '{target}' swaps levels absent from {self.level_set}"
                )
            a, b = index[first], index[second]
            permutation = np.where(
                permutation == a, b, np.where(permutation == b, a, permutation)
            )
        self.cumulative = np.zeros((n_labels, n_intervals))
        if n_intervals > 1:
            self.cumulative[:, 1:] = np.cumsum(
                self.velocity[:, :-1] * np.diff(self.breaks), axis=1
            )

    def _interval(self, t) -> np.ndarray:
        interval = np.searchsorted(self.breaks, t, side="right") - 1
        return np.clip(interval, 0, self.breaks.size - 1)

    def phase(self, labels, t) -> np.ndarray:
        """Return the phase accumulated by each label from 0 to t."""
        interval = self._interval(t)
        return self.cumulative[labels, interval] + self.velocity[labels, interval] * (
            t - self.breaks[interval]
        )

    def physical_index(self, labels, t) -> np.ndarray:
        """Return the level_set index a label occupies physically at t."""
        return self.physical[labels, self._interval(t)]


def sample_trace(
    params: FluctuatorParams, init_state: InitState, horizon: float, rng_seed: int
) -> RtnTrace:
    """Return one continuous-time jump trajectory of the fluctuator."""
    if not horizon > 0:
        raise InvalidParameterError(f"horizon must be > 0, got {horizon}")
    rng = stream_generator(rng_seed, 0)
    level_set = params.level_set
    occupancies = initial_occupancies(params, init_state)
    label = int(rng.choice(len(level_set), p=occupancies))
    jump_times, levels = [], [level_set[label]]
    exit_rate = params.exit_rate
    now = 0.0
    while exit_rate > 0:
        now += rng.exponential(1.0 / exit_rate)
        if now >= horizon:
            break
        label = (label + int(rng.integers(1, len(level_set)))) % len(level_set)
        jump_times.append(now)
        levels.append(level_set[label])
    return RtnTrace(tuple(jump_times), tuple(levels), horizon, seed=rng_seed)


def phase_integrate(
    trace: RtnTrace,
    schedule: PulseSchedule,
    velocity_of_level: Mapping[int, float],
) -> complex:
    """Return exp(i phi) accumulated by the qubit along the trace."""
    end = schedule.total_duration
    if end > trace.horizon:
        raise InvalidParameterError(ERROR_SCHEDULE_MISMATCH % (end, trace.horizon))
    level_set = tuple(sorted(set(velocity_of_level) | set(trace.levels)))
    phase_map = PhaseMap(schedule, level_set, velocity_of_level)
    jumps = [time for time in trace.jump_times if time < end]
    bounds = np.array([0.0, *jumps, end])
    labels = np.array([level_set.index(level) for level in trace.levels[: len(bounds) - 1]])
    phases = phase_map.phase(labels, bounds[1:]) - phase_map.phase(labels, bounds[:-1])
    return cmath.exp(1j * stable_sum(phases))


class _BlockSimulator:
    """Vectorised trajectories for one block of the ensemble."""

    def __init__(
        self,
        params: FluctuatorParams,
        occupancies: np.ndarray,
        phase_map: PhaseMap,
        times: np.ndarray,
        seed: int,
    ) -> None:
        self.params = params
        self.occupancies = occupancies
        self.phase_map = phase_map
        self.times = times
        self.seed = seed

    def __call__(self, block: tuple[int, int]) -> tuple[np.ndarray, ...]:
        index, size = block
        rng = stream_generator(self.seed, index)
        n_levels = self.params.levels
        times, phase_map = self.times, self.phase_map
        labels = rng.choice(n_levels, size=size, p=self.occupancies)
        start = np.zeros(size)
        accumulated = np.zeros(size)
        phase_out = np.zeros((size, times.size))
        level_out = np.zeros((size, times.size), dtype=int)
        active = np.arange(size)
        exit_rate = self.params.exit_rate
        horizon = times[-1]
        while active.size:
            now, label = start[active], labels[active]
            if exit_rate > 0:
                end = now + rng.exponential(1.0 / exit_rate, size=active.size)
            else:
                end = np.full(active.size, np.inf)
            phase_now = phase_map.phase(label, now)
            rows, cols = np.nonzero(
                (times[None, :] >= now[:, None]) & (times[None, :] < end[:, None])
            )
            if rows.size:
                sample_times = times[cols]
                phase_out[active[rows], cols] = (
                    accumulated[active[rows]]
                    + phase_map.phase(label[rows], sample_times)
                    - phase_now[rows]
                )
                level_out[active[rows], cols] = phase_map.physical_index(
                    label[rows], sample_times
                )
            going = end <= horizon
            active, label, now, end = active[going], label[going], now[going], end[going]
            accumulated[active] += phase_map.phase(label, end) - phase_now[going]
            start[active] = end
            if n_levels == 2:
                labels[active] = 1 - label
            else:
                labels[active] = (label + rng.integers(1, n_levels, size=active.size)) % (
                    n_levels
                )
        values = np.exp(1j * phase_out)
        by_level = np.stack(
            [np.where(level_out == level, values, 0).sum(axis=0) for level in range(n_levels)]
        )
        counts = np.stack([(level_out == level).sum(axis=0) for level in range(n_levels)])
        return (
            by_level,
            counts,
            (values.real**2).sum(axis=0),
            (values.imag**2).sum(axis=0),
        )


def _default_times(schedule: PulseSchedule) -> np.ndarray:
    if schedule.n_pulses:
        return np.concatenate(([0.0], schedule.cycle_ends()))
    return np.linspace(0.0, schedule.total_duration, DEFAULT_TIMES)


def mc_coherence(
    params: FluctuatorParams,
    init_state: InitState,
    schedule: PulseSchedule,
    n_traj: int,
    seed: int,
    times: Sequence[float] | None = None,
    block_size: int = MC_BLOCK_SIZE,
) -> McResult:
    """Return the ensemble-mean coherence of n_traj trajectories.

    Trajectories are simulated in fixed blocks, each with its own counter-based
    stream, and reduced in block order; the result does not depend on the
    number of workers.
    """
    if n_traj < 1:
        raise InvalidParameterError(f"n_traj must be >= 1, got {n_traj}")
    _check_seed(seed)
    times = _default_times(schedule) if times is None else np.asarray(times, dtype=float)
    if times.size == 0 or np.any(np.diff(times) < 0) or times[0] < 0:
        raise InvalidParameterError("times must be non-empty, sorted and >= 0")
    if times[-1] > schedule.total_duration * (1 + 1e-12):
        raise InvalidParameterError(
            ERROR_SCHEDULE_MISMATCH % (times[-1], schedule.total_duration)
        )
    level_set = params.level_set
    phase_map = PhaseMap(
        schedule, level_set, {level: params.velocity(level) for level in level_set}
    )
    simulator = _BlockSimulator(
        params, initial_occupancies(params, init_state), phase_map, times, seed
    )
    blocks = [
        (index, min(block_size, n_traj - start))
        for index, start in enumerate(range(0, n_traj, block_size))
    ]
    _LOGGER.debug("mc_coherence: %s trajectories in %s blocks", n_traj, len(blocks))
    partials = ordered_map(simulator, blocks)

    by_level = {}
    occupancy = {}
    for slot, level in enumerate(level_set):
        by_level[level] = np.array(
            [
                stable_complex_sum([part[0][slot, column] for part in partials]) / n_traj
                for column in range(times.size)
            ]
        )
        occupancy[level] = (
            np.sum([part[1][slot] for part in partials], axis=0) / n_traj
        )
    mean = np.array(
        [
            stable_complex_sum([by_level[level][column] for level in level_set])
            for column in range(times.size)
        ]
    )
    second_re = np.array(
        [stable_sum(part[2][column] for part in partials) for column in range(times.size)]
    )
    second_im = np.array(
        [stable_sum(part[3][column] for part in partials) for column in range(times.size)]
    )
    dof = max(n_traj - 1, 1)
    var_re = np.maximum(second_re - n_traj * mean.real**2, 0.0) / dof
    var_im = np.maximum(second_im - n_traj * mean.imag**2, 0.0) / dof
    se_re = np.sqrt(var_re / n_traj)
    se_im = np.sqrt(var_im / n_traj)
    return McResult(
        times=times,
        mean=mean,
        by_level=by_level,
        occupancy=occupancy,
        se=np.hypot(se_re, se_im),
        se_re=se_re,
        se_im=se_im,
        n_traj=n_traj,
        seed=seed,
    )


def _forbidden_length(centers: np.ndarray, t_p: float, lower: float, upper: float) -> float:
    """Return the measure of discard zones within [lower, upper]."""
    starts = np.concatenate((centers - t_p, centers + t_p / 2))
    ends = np.concatenate((centers - t_p / 2, centers + t_p))
    order = np.argsort(starts, kind="stable")
    starts = np.clip(starts[order], lower, upper)
    ends = np.clip(ends[order], lower, upper)
    reach = np.maximum.accumulate(ends)
    previous = np.concatenate(([lower], reach[:-1]))
    return float(np.sum(np.maximum(ends - np.maximum(starts, previous), 0.0)))


def _nearest_center(centers: np.ndarray, flips: np.ndarray) -> np.ndarray:
    if centers.size == 1:
        return np.zeros(flips.size, dtype=int)
    right = np.clip(np.searchsorted(centers, flips), 1, centers.size - 1)
    left = right - 1
    return np.where(
        np.abs(flips - centers[left]) <= np.abs(centers[right] - flips), left, right
    )


def _poisson_flips(rng: np.random.Generator, pieces) -> np.ndarray:
    flips = []
    for lower, upper, rate in pieces:
        if rate > 0 and upper > lower:
            count = rng.poisson(rate * (upper - lower))
            flips.append(rng.uniform(lower, upper, size=count))
    if not flips:
        return np.zeros(0)
    return np.sort(np.concatenate(flips))


def engineered_traces(
    t1_target: float,
    n_traces: int,
    horizon: float,
    t_p: float,
    schedule: PulseSchedule | None,
    seed: int,
) -> TraceEnsemble:
    """Return a fixed-count ensemble of Poisson flip traces between |-1> and |0>.

    Flips within t_p/2 of a pulse center are merged onto it (that pulse is
    omitted); flips within t_p but not t_p/2 discard the trace, which is
    replaced from a fresh stream.
    """
    if math.isnan(t1_target) or t1_target <= 0:
        raise InvalidParameterError(f"t1_target must be > 0, got {t1_target}")
    if n_traces < 1 or not horizon > 0 or t_p < 0:
        raise InvalidParameterError("need n_traces >= 1, horizon > 0 and t_p >= 0")
    _check_seed(seed)
    rate = 0.0 if math.isinf(t1_target) else 1.0 / (2.0 * t1_target)
    centers = np.zeros(0) if schedule is None else schedule.pulse_centers
    pieces = [(0.0, horizon, rate)]
    if centers.size:
        spacing = np.diff(centers).min() if centers.size > 1 else math.inf
        if t_p >= spacing:
            raise ScheduleInfeasibleError(
                ERROR_SCHEDULE_INFEASIBLE % f"t_p={t_p} >= tau={spacing}"
            )
        lower = max(0.0, centers[0] - t_p)
        upper = min(horizon, centers[-1] + t_p)
        if upper > lower:
            excluded = _forbidden_length(centers, t_p, lower, upper) / (upper - lower)
            pieces = [
                (0.0, lower, rate),
                (lower, upper, rate / (1.0 - excluded)),
                (upper, horizon, rate),
            ]
    first, second = ENGINEERED_LEVELS
    traces, n_discarded, n_merged = [], 0, 0
    max_attempts = MAX_TRACE_ATTEMPTS_FACTOR * n_traces + MAX_TRACE_ATTEMPTS_FACTOR
    stream = 0
    while len(traces) < n_traces:
        if stream >= max_attempts:
            raise ScheduleInfeasibleError(ERROR_TRACE_ATTEMPTS % (n_traces, stream))
        flips = _poisson_flips(stream_generator(seed, stream), pieces)
        merged: tuple[int, ...] = ()
        if centers.size and flips.size:
            nearest = _nearest_center(centers, flips)
            distance = np.abs(flips - centers[nearest])
            snap = distance < t_p / 2
            snapped = np.where(snap, centers[nearest], flips)
            if (
                np.any((distance >= t_p / 2) & (distance < t_p))
                or np.any(np.diff(snapped) <= 0)
                or snapped[-1] >= horizon
            ):
                n_discarded += 1
                stream += 1
                continue
            flips = snapped
            merged = tuple(int(index) for index in nearest[snap])
        levels = tuple(first if i % 2 == 0 else second for i in range(flips.size + 1))
        traces.append(
            RtnTrace(
                jump_times=tuple(float(time) for time in flips),
                levels=levels,
                horizon=horizon,
                seed=seed,
                stream=stream,
                t_p=t_p,
                terminal_flip=levels[-1] == second,
                merged_pulses=merged,
            )
        )
        n_merged += len(merged)
        stream += 1
    ensemble = TraceEnsemble(
        traces=tuple(traces),
        t_p=t_p,
        horizon=horizon,
        seed=seed,
        t1_target=t1_target,
        n_discarded=n_discarded,
        n_merged=n_merged,
    )
    if ensemble.discard_rate > DISCARD_RATE_BOUND:
        _LOGGER.warning(
            WARN_DISCARD_RATE, 100 * ensemble.discard_rate, 100 * DISCARD_RATE_BOUND
        )
    else:
        _LOGGER.info(
            "Engineered ensemble: %s traces, %s discarded, %s merged",
            ensemble.n_traces,
            n_discarded,
            n_merged,
        )
    return ensemble


def ensemble_population_difference(ensemble: TraceEnsemble, times) -> np.ndarray:
    """Return the mean population difference P(-1) - P(0) at each time."""
    times = np.asarray(times, dtype=float)
    first, _ = ENGINEERED_LEVELS
    total = np.zeros(times.size)
    for trace in ensemble.traces:
        total += np.where(trace.level_at(times) == first, 1.0, -1.0)
    return total / ensemble.n_traces


def ensemble_records(ensemble: TraceEnsemble) -> list[str]:
    """Return the line-delimited JSON records of an ensemble."""
    lines = [json.dumps({"type": "ensemble", **ensemble.header()})]
    lines.extend(
        json.dumps({"type": "trace", **trace.as_record()}) for trace in ensemble.traces
    )
    return lines


def ensemble_hash(ensemble: TraceEnsemble) -> str:
    """Return a digest of the persisted form."""
    digest = hashlib.sha256()
    for line in ensemble_records(ensemble):
        digest.update(line.encode("utf8"))
        digest.update(b"\n")
    return digest.hexdigest()
