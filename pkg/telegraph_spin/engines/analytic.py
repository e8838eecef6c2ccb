"""Semi-analytic coherence: free decay, pulsed propagation and eigenstructure."""

import logging
import math
from collections.abc import Sequence

import numpy as np

from ..classes.fluctuator import FluctuatorParams, ProbVector, PulseOperator
from ..classes.results import DecayCurve, EigenReport, SweepRow
from ..classes.schedule import PulseSchedule
from ..const import (
    ENVELOPE_SPAN,
    ERROR_DEFECTIVE_BLOCK,
    ERROR_NO_CROSSING,
    FREE_DECAY_SAMPLES,
    MAX_CYCLES,
    ONE_OVER_E,
    Drive,
)
from ..exceptions import InvalidParameterError, NoCrossingError
from ..helpers.linalg import (
    PropagatorCache,
    mat_exp,
    modal_expansion,
    propagate_piecewise,
)
from ..helpers.pool import ordered_map
from ..helpers.utils import crossing_time, reverse_envelope
from .model import InitState, generator, initial_vector

_LOGGER = logging.getLogger(__name__)

_PULSE_MATRICES = {
    2: {
        Drive.QUBIT: np.diag([1.0, -1.0]),
        Drive.DQ: np.diag([1.0, -1.0]),
    },
    3: {
        Drive.QUBIT: np.diag([1.0, 1.0, -1.0]),
        Drive.DQ: np.diag([1.0, 1.0, -1.0]),
        Drive.SQ_PLUS: np.array([[1.0, 0.0, 0.0], [1.0, -0.5, -0.5], [1.0, -1.5, 0.5]]),
        Drive.SQ_MINUS: np.array([[1.0, 0.0, 0.0], [1.0, -0.5, 0.5], [-1.0, 1.5, 0.5]]),
    },
}


def pulse_operator(levels: int, drive: Drive | str) -> PulseOperator:
    """Return the pi-pulse operator in the probability-vector basis."""
    drive = Drive(drive)
    try:
        matrix = _PULSE_MATRICES[levels][drive]
    except KeyError:
        raise InvalidParameterError(
            f"drive '{drive}' is not defined for a {levels}-level fluctuator"
        ) from None
    return PulseOperator(drive, matrix)


def _check_tau(tau: float) -> None:
    if not math.isfinite(tau) or tau <= 0:
        raise InvalidParameterError(f"tau must be > 0, got {tau}")


def propagate_free(params: FluctuatorParams, init_state: InitState, t: float) -> ProbVector:
    """Return the probability vector after free evolution for t."""
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t}")
    x0 = initial_vector(params, init_state)
    entries = mat_exp(generator(params).matrix, t) @ x0.entries
    return ProbVector(x0.basis, entries)


def coherence_free(params: FluctuatorParams, init_state: InitState, t: float) -> complex:
    """Return the free-evolution coherence at t."""
    return propagate_free(params, init_state, t).coherence


def coherence_curve(
    params: FluctuatorParams, init_state: InitState, times: Sequence[float]
) -> np.ndarray:
    """Return the free-evolution coherence at every time."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise InvalidParameterError("times must be >= 0")
    matrix = generator(params).matrix
    x0 = initial_vector(params, init_state).entries
    expansion = modal_expansion(matrix, x0)
    if expansion.well_conditioned:
        return expansion.first_component(np.exp(np.outer(times, expansion.eigenvalues)))
    return np.array([(mat_exp(matrix, t) @ x0)[0] for t in times])


class CycleBlock:
    """Per-cycle block exp(M tau/2) U exp(M tau/2) applied to an initial vector."""

    def __init__(
        self,
        params: FluctuatorParams,
        init_state: InitState,
        drive: Drive | str,
        tau: float,
        operator: np.ndarray | None = None,
    ) -> None:
        """Initialise the block."""
        _check_tau(tau)
        self.params = params
        self.tau = tau
        self.x0 = initial_vector(params, init_state)
        half = mat_exp(generator(params).matrix, tau / 2)
        if operator is None:
            operator = pulse_operator(params.levels, drive).matrix
        self.matrix = half @ operator @ half
        self.expansion = modal_expansion(self.matrix, self.x0.entries)

    def state(self, n_cycles: int) -> np.ndarray:
        """Return the vector after n_cycles."""
        if n_cycles < 0:
            raise InvalidParameterError(f"n_pulses must be >= 0, got {n_cycles}")
        if self.expansion.well_conditioned:
            return self.expansion.state(self.expansion.eigenvalues ** int(n_cycles))
        return np.linalg.matrix_power(self.matrix, int(n_cycles)) @ self.x0.entries

    def coherence(self, n_cycles: int) -> complex:
        """Return the coherence after n_cycles."""
        if self.expansion.well_conditioned:
            return complex(
                self.expansion.first_component(self.expansion.eigenvalues ** int(n_cycles))
            )
        return complex(self.state(n_cycles)[0])


def propagate_dd(
    params: FluctuatorParams,
    init_state: InitState,
    drive: Drive | str,
    tau: float,
    n_pulses: int,
) -> ProbVector:
    """Return the probability vector after n_pulses CPMG cycles."""
    block = CycleBlock(params, init_state, drive, tau)
    return ProbVector(block.x0.basis, block.state(n_pulses))


def coherence_dd(
    params: FluctuatorParams,
    init_state: InitState,
    drive: Drive | str,
    tau: float,
    n_pulses: int,
) -> complex:
    """Return the coherence after n_pulses CPMG cycles of spacing tau."""
    return CycleBlock(params, init_state, drive, tau).coherence(n_pulses)


def _interpolated_crossing(
    n_low: int, n_high: int, mag_low: float, mag_high: float, tau: float
) -> float:
    log_low = math.log(mag_low)
    log_high = math.log(max(mag_high, np.finfo(float).tiny))
    fraction = (log_low + 1.0) / (log_low - log_high)
    return tau * (n_low + fraction * (n_high - n_low))


def effective_t2(
    params: FluctuatorParams,
    init_state: InitState,
    drive: Drive | str,
    tau: float,
    max_cycles: int = MAX_CYCLES,
) -> float:
    """Return the 1/e time of the coherence under CPMG with spacing tau.

    Cycle counts are bracketed geometrically and bisected; the crossing is
    interpolated log-linearly between the bracketing cycle counts.
    """
    block = CycleBlock(params, init_state, drive, tau)

    def magnitude(n_cycles: int) -> float:
        return abs(block.coherence(n_cycles))

    n_low, mag_low = 0, magnitude(0)
    if mag_low <= ONE_OVER_E:
        return 0.0
    n_high = 1
    while (mag_high := magnitude(n_high)) > ONE_OVER_E:
        if n_high >= max_cycles:
            raise NoCrossingError(ERROR_NO_CROSSING % f"{max_cycles} cycles")
        n_low, mag_low = n_high, mag_high
        n_high = min(2 * n_high, max_cycles)
    _LOGGER.debug("effective_t2 bracket [%s, %s] at tau=%s", n_low, n_high, tau)
    while n_high - n_low > 1:
        middle = (n_low + n_high) // 2
        mag_middle = magnitude(middle)
        if mag_middle > ONE_OVER_E:
            n_low, mag_low = middle, mag_middle
        else:
            n_high, mag_high = middle, mag_middle
    return _interpolated_crossing(n_low, n_high, mag_low, mag_high, tau)


def _sinc(x_squared: float) -> float:
    """Return sin(x)/x continued to sinh(|x|)/|x| for negative x**2."""
    if x_squared > 0:
        x = math.sqrt(x_squared)
        return math.sin(x) / x
    if x_squared < 0:
        x = math.sqrt(-x_squared)
        return math.sinh(x) / x
    return 1.0


def _two_level_terms(params: FluctuatorParams, tau: float) -> tuple[float, float, float]:
    """Return (gamma tau sinc, sqrt term, half-step sinc) of the 2LF cycle."""
    if params.levels != 2:
        raise InvalidParameterError("closed forms need a 2-level fluctuator")
    _check_tau(tau)
    gamma, v = params.gamma, params.v
    w_squared = v * v - gamma * gamma
    sinc = _sinc(w_squared * tau * tau)
    sinc_half = _sinc(w_squared * tau * tau / 4.0)
    b = gamma * tau * sinc
    return b, math.sqrt(1.0 + b * b), sinc_half


def t2_rate_2lf(params: FluctuatorParams, tau: float) -> float:
    """Return 1/T2 of a 2LF under pi pulses spaced tau."""
    b, root, _ = _two_level_terms(params, tau)
    return params.gamma - math.log(b + root) / tau


def closed_form_2lf(
    params: FluctuatorParams, tau: float, p: float
) -> tuple[np.ndarray, np.ndarray]:
    """Return (eigenvalues, coefficients) of the 2LF cycle for initial vector (1, p).

    Ordered as (lambda_plus, lambda_minus).
    """
    b, root, sinc_half = _two_level_terms(params, tau)
    gamma, v = params.gamma, params.v
    decay = math.exp(-gamma * tau)
    eigenvalues = np.array([decay * (b + root), decay * (b - root)])
    g_half = gamma * tau * sinc_half
    off_diagonal = 1j * v * gamma * tau * tau * sinc_half * sinc_half / (4.0 * root)
    diagonal = (1.0 + 0.5 * g_half * g_half) / (2.0 * root)
    coefficients = np.array(
        [0.5 + diagonal + p * off_diagonal, 0.5 - diagonal - p * off_diagonal]
    )
    return eigenvalues, coefficients


def eigen_report(
    params: FluctuatorParams,
    init_state: InitState,
    drive: Drive | str,
    tau: float,
) -> EigenReport:
    """Return eigenvalues and coherence coefficients of the per-cycle block.

    Sorted by decreasing real part.
    """
    block = CycleBlock(params, init_state, drive, tau)
    expansion = block.expansion
    order = np.argsort(-expansion.eigenvalues.real, kind="stable")
    if not expansion.well_conditioned:
        _LOGGER.warning(ERROR_DEFECTIVE_BLOCK, expansion.condition)
    return EigenReport(
        tau=tau,
        eigenvalues=expansion.eigenvalues[order],
        coefficients=expansion.coefficients[order],
        degenerate=not expansion.well_conditioned,
        condition=expansion.condition,
    )


def weak_t2star_3lf(params: FluctuatorParams) -> float:
    """Return T2* from the slowest mode of the free 3LF generator."""
    if params.levels != 3:
        raise InvalidParameterError("weak_t2star_3lf needs a 3-level fluctuator")
    gamma, v = params.gamma, params.v
    discriminant = complex(v**4 - 9 * v * v * gamma * gamma + 27 * gamma**4)
    k = (9 * gamma**3 + math.sqrt(3) * v * np.sqrt(discriminant)) ** (1.0 / 3.0)
    if k == 0:
        return math.inf
    rate = (
        2 * gamma
        - (3 * gamma * gamma - v * v) / (3 ** (1.0 / 3.0) * k)
        - k / 3 ** (2.0 / 3.0)
    ).real
    return math.inf if rate <= 0 else 1.0 / rate


def strong_limit_t2star(levels: int, t1: float) -> float:
    """Return T2* of a strongly coupled fluctuator."""
    if levels == 2:
        return 2.0 * t1
    if levels == 3:
        return 1.5 * t1
    raise InvalidParameterError(f"levels must be 2 or 3, got {levels}")


def free_t2star(params: FluctuatorParams, init_state: InitState) -> float:
    """Return the 1/e time of the free-decay envelope."""
    matrix = generator(params).matrix
    expansion = modal_expansion(matrix, initial_vector(params, init_state).entries)
    rates = -expansion.eigenvalues.real
    if expansion.well_conditioned:
        weights = np.abs(expansion.coefficients)
        rates = rates[weights > 1e-12 * weights.max()]
    slowest = rates.min()
    if slowest <= 1e-14 * max(params.gamma, params.v):
        raise NoCrossingError(ERROR_NO_CROSSING % "infinite time")
    times = np.linspace(0.0, ENVELOPE_SPAN / slowest, FREE_DECAY_SAMPLES)
    envelope = reverse_envelope(np.abs(coherence_curve(params, init_state, times)))
    return crossing_time(times, envelope)


def pulse_matrices(params: FluctuatorParams, schedule: PulseSchedule) -> list[np.ndarray]:
    """Return the operator of every pulse in the schedule."""
    return [pulse_operator(params.levels, pulse.target).matrix for pulse in schedule.pulses]


def propagate_schedule(
    params: FluctuatorParams,
    init_state: InitState,
    schedule: PulseSchedule,
    times: Sequence[float] | None = None,
) -> list[ProbVector]:
    """Return the probability vector at each time (default: cycle ends)."""
    if times is None:
        times = schedule.cycle_ends()
    x0 = initial_vector(params, init_state)
    states = propagate_piecewise(
        x0.entries,
        schedule.pulse_centers,
        pulse_matrices(params, schedule),
        np.asarray(times, dtype=float),
        PropagatorCache(generator(params).matrix),
    )
    return [ProbVector(x0.basis, state) for state in states]


def coherence_schedule(
    params: FluctuatorParams,
    init_state: InitState,
    schedule: PulseSchedule,
    times: Sequence[float] | None = None,
) -> np.ndarray:
    """Return the coherence at each time (default: cycle ends)."""
    return np.array(
        [
            vector.coherence
            for vector in propagate_schedule(params, init_state, schedule, times)
        ]
    )


def sweep_t2_vs_tau(
    params: FluctuatorParams,
    drive: Drive | str,
    tau_list: Sequence[float],
    init_state: InitState = -1,
    max_cycles: int = MAX_CYCLES,
) -> list[SweepRow]:
    """Return effective T2 for each pulse spacing."""
    if not tau_list:
        raise InvalidParameterError("tau_list is empty")
    for tau in tau_list:
        _check_tau(tau)

    def row(tau: float) -> SweepRow:
        try:
            return SweepRow(tau, effective_t2(params, init_state, drive, tau, max_cycles))
        except NoCrossingError as err:
            _LOGGER.debug("No crossing at tau=%s: %s", tau, err)
            return SweepRow(tau, None, "no_crossing")

    return ordered_map(row, list(tau_list))


def free_decay_curve(
    params: FluctuatorParams, init_state: InitState, times: Sequence[float]
) -> DecayCurve:
    """Return the free decay as a curve."""
    return DecayCurve(
        t=np.asarray(times, dtype=float),
        coherence=coherence_curve(params, init_state, times),
        engine="analytic",
        provenance={"levels": params.levels, "gamma": params.gamma, "v": params.v},
    )


def schedule_decay_curve(
    params: FluctuatorParams,
    init_state: InitState,
    schedule: PulseSchedule,
    times: Sequence[float] | None = None,
) -> DecayCurve:
    """Return the pulsed decay as a curve sampled at cycle ends."""
    if times is None:
        times = schedule.cycle_ends()
    return DecayCurve(
        t=np.asarray(times, dtype=float),
        coherence=coherence_schedule(params, init_state, schedule, times),
        engine="analytic",
        provenance={"levels": params.levels, "gamma": params.gamma, "v": params.v},
    )
