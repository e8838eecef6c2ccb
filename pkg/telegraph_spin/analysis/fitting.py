"""Exponential and oscillating-exponential fits of decay data."""

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from ..classes.results import DecayCurve, FitResult
from ..const import (
    AMBIGUOUS_PEAK_RATIO,
    CONFIDENCE_LEVEL,
    ERROR_FIT_DEGENERATE,
    ERROR_FIT_NO_CONVERGENCE,
    FIT_MAX_ITERATIONS,
    FIT_MAX_STARTS,
    FIT_REFINED_STARTS,
    FIT_XTOL,
    ONE_OVER_E,
    WARN_AMBIGUOUS_PEAK,
    FitModel,
)
from ..exceptions import FitConvergenceError, InvalidParameterError
from ..helpers.utils import crossing_time

_LOGGER = logging.getLogger(__name__)

MIN_POINTS = {FitModel.EXPONENTIAL: 4, FitModel.OSCILLATING: 8}
OSC_DECAY_STARTS = 25
LONG_DECAY_FACTOR = 100.0


def unpack_points(points, use_magnitude: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Return (t, y) from a DecayCurve, a (t, y) pair or an (n, 2) array."""
    if isinstance(points, DecayCurve):
        values = points.magnitude if use_magnitude else points.coherence.real
        return np.array(points.t, dtype=float), np.array(values, dtype=float)
    if isinstance(points, tuple) and len(points) == 2:
        t, y = points
    else:
        array = np.asarray(points, dtype=float)
        if array.ndim != 2 or array.shape[1] != 2:
            raise InvalidParameterError("points must be (t, y) pairs")
        t, y = array[:, 0], array[:, 1]
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise InvalidParameterError("t and y must be 1-d arrays of equal length")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise InvalidParameterError("points must be finite")
    return t, y


def _check_points(model: FitModel, t: np.ndarray, y: np.ndarray):
    if t.size < MIN_POINTS[model]:
        raise InvalidParameterError(
            f"model '{model}' needs at least {MIN_POINTS[model]} points, got {t.size}"
        )
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise FitConvergenceError(ERROR_FIT_DEGENERATE % (model, "constant data"))


def _decay_grid(t: np.ndarray, count: int) -> np.ndarray:
    span = float(np.ptp(t))
    steps = np.diff(np.unique(t))
    low = float(steps.min()) if steps.size else span
    return np.geomspace(low, 10.0 * span, count)


def refine(
    model: str,
    residuals: Callable[[np.ndarray], np.ndarray],
    starts: Sequence[tuple[float, np.ndarray]],
) -> optimize.OptimizeResult:
    """Refine starts in order of their cost; return the best accepted optimum.

    Starts are tried until FIT_REFINED_STARTS converge; ties go to the
    earlier start.
    """
    ordered = sorted(enumerate(starts), key=lambda item: (item[1][0], item[0]))
    accepted = []
    tried = 0
    for index, (_, x0) in ordered[:FIT_MAX_STARTS]:
        tried += 1
        try:
            result = optimize.least_squares(
                residuals,
                x0,
                method="lm",
                xtol=FIT_XTOL,
                max_nfev=FIT_MAX_ITERATIONS * (len(x0) + 1),
            )
        except (ValueError, np.linalg.LinAlgError) as err:
            _LOGGER.debug("Start %s of '%s' failed: %s", index, model, err)
            continue
        if result.status > 0 and np.isfinite(result.cost) and np.all(np.isfinite(result.x)):
            accepted.append((result.cost, index, result))
            if len(accepted) == FIT_REFINED_STARTS:
                break
    if not accepted:
        raise FitConvergenceError(ERROR_FIT_NO_CONVERGENCE % (model, tried))
    cost, index, best = min(accepted, key=lambda item: (item[0], item[1]))
    _LOGGER.debug("Fit '%s': best start %s of %s tried, cost %.6g", model, index, tried, cost)
    return best


def covariance(result: optimize.OptimizeResult, n_points: int) -> tuple[float, np.ndarray]:
    """Return (residual variance, parameter covariance) at the optimum."""
    dof = n_points - result.x.size
    variance = 2.0 * result.cost / dof
    jacobian = np.asarray(result.jac, dtype=float)
    return variance, variance * np.linalg.pinv(jacobian.T @ jacobian)


def t_quantile(dof: int) -> float:
    """Return the two-sided Student-t quantile for the confidence level."""
    return float(stats.t.ppf(0.5 + CONFIDENCE_LEVEL / 2.0, dof))


def _linear_coefficients(basis: np.ndarray, y: np.ndarray, weights: np.ndarray):
    coefficients, *_ = np.linalg.lstsq(basis * weights[:, None], y * weights, rcond=None)
    residual = (basis @ coefficients - y) * weights
    return coefficients, float(residual @ residual)


def _weights(sigma, t: np.ndarray) -> np.ndarray:
    if sigma is None:
        return np.ones_like(t)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), t.shape)
    if np.any(sigma <= 0):
        raise InvalidParameterError("sigma must be > 0")
    return 1.0 / sigma


def _long_decay_notes(decay: float, t: np.ndarray) -> tuple[str, ...]:
    if decay > LONG_DECAY_FACTOR * np.ptp(t):
        return ("decay time far beyond sampled span",)
    return ()


def fit_exponential(points, sigma=None) -> FitResult:
    """Fit a*exp(-t/T) + c by multi-start Levenberg-Marquardt."""
    t, y = unpack_points(points)
    _check_points(FitModel.EXPONENTIAL, t, y)
    weights = _weights(sigma, t)

    def residuals(x):
        a, log_t, c = x
        return (a * np.exp(-t / np.exp(log_t)) + c - y) * weights

    starts = []
    for decay in _decay_grid(t, FIT_MAX_STARTS):
        basis = np.column_stack([np.exp(-t / decay), np.ones_like(t)])
        (a, c), cost = _linear_coefficients(basis, y, weights)
        starts.append((cost, np.array([a, math.log(decay), c])))
    result = refine(FitModel.EXPONENTIAL, residuals, starts)

    a, log_t, c = result.x
    decay = math.exp(log_t)
    variance, cov = covariance(result, t.size)
    errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    scale = t_quantile(t.size - 3)
    return FitResult(
        model=str(FitModel.EXPONENTIAL),
        params={"a": float(a), "t": decay, "c": float(c)},
        ci={
            "a": scale * errors[0],
            "t": scale * decay * errors[1],
            "c": scale * errors[2],
        },
        mse=variance,
        converged=True,
        n_points=int(t.size),
        notes=_long_decay_notes(decay, t),
    )


def spectral_peaks(t: np.ndarray, y: np.ndarray) -> tuple[float, float | None]:
    """Return the strongest angular frequency and a rival within the ambiguity ratio."""
    uniform = np.linspace(t[0], t[-1], t.size)
    resampled = np.interp(uniform, t, y)
    detrended = resampled - np.polyval(np.polyfit(uniform, resampled, 1), uniform)
    power = np.abs(np.fft.rfft(detrended)) ** 2
    omegas = 2.0 * math.pi * np.fft.rfftfreq(t.size, uniform[1] - uniform[0])
    peaks = [
        k
        for k in range(1, power.size)
        if power[k] >= power[k - 1] and (k + 1 == power.size or power[k] >= power[k + 1])
    ]
    if not peaks:
        return 0.0, None
    peaks.sort(key=lambda k: power[k], reverse=True)
    best = peaks[0]
    rival = None
    if len(peaks) > 1 and power[peaks[1]] >= AMBIGUOUS_PEAK_RATIO * power[best]:
        rival = float(omegas[peaks[1]])
    return float(omegas[best]), rival


def _normalise_phase(a: float, omega: float, phi: float) -> tuple[float, float, float]:
    if a < 0:
        a, phi = -a, phi + math.pi
    if omega < 0:
        omega, phi = -omega, -phi
    phi = math.remainder(phi, 2.0 * math.pi)
    if phi == -math.pi:
        phi = math.pi
    return a, omega, phi


def fit_osc_exponential(points, sigma=None) -> FitResult:
    """Fit a*exp(-t/T)*cos(omega t + phi) + c.

    omega is seeded from the spectral peak of the detrended data and from
    zero, so non-oscillating input degrades to an exponential.
    """
    t, y = unpack_points(points, use_magnitude=False)
    _check_points(FitModel.OSCILLATING, t, y)
    weights = _weights(sigma, t)
    notes = []
    peak, rival = spectral_peaks(t, y)
    if rival is not None:
        _LOGGER.warning(WARN_AMBIGUOUS_PEAK, peak, rival)
        notes.append(WARN_AMBIGUOUS_PEAK % (peak, rival))

    def residuals(x):
        a, log_t, omega, phi, c = x
        model = a * np.exp(-t / np.exp(log_t)) * np.cos(omega * t + phi) + c
        return (model - y) * weights

    starts = []
    seeds = [peak, 0.0] if rival is None else [peak, rival, 0.0]
    for omega in seeds:
        for decay in _decay_grid(t, OSC_DECAY_STARTS):
            envelope = np.exp(-t / decay)
            basis = np.column_stack(
                [envelope * np.cos(omega * t), -envelope * np.sin(omega * t), np.ones_like(t)]
            )
            (u, v, c), cost = _linear_coefficients(basis, y, weights)
            starts.append(
                (cost, np.array([math.hypot(u, v), math.log(decay), omega, math.atan2(v, u), c]))
            )
    result = refine(FitModel.OSCILLATING, residuals, starts)

    a, log_t, omega, phi, c = result.x
    a, omega, phi = _normalise_phase(float(a), float(omega), float(phi))
    decay = math.exp(log_t)
    variance, cov = covariance(result, t.size)
    errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    scale = t_quantile(t.size - 5)
    notes.extend(_long_decay_notes(decay, t))
    return FitResult(
        model=str(FitModel.OSCILLATING),
        params={"a": a, "t": decay, "omega": omega, "phi": phi, "c": float(c)},
        ci={
            "a": scale * errors[0],
            "t": scale * decay * errors[1],
            "omega": scale * errors[2],
            "phi": scale * errors[3],
            "c": scale * errors[4],
        },
        mse=variance,
        converged=True,
        n_points=int(t.size),
        notes=tuple(notes),
    )


def one_over_e_time(points) -> float:
    """Return the first log-linear 1/e crossing of |coherence|."""
    t, y = unpack_points(points)
    return crossing_time(t, np.abs(y), ONE_OVER_E)


def fit_curve(curve: DecayCurve, model: FitModel | str) -> FitResult:
    """Fit a decay curve with the named model."""
    model = FitModel(model)
    if model == FitModel.EXPONENTIAL:
        usable = curve.se is not None and bool(np.all(curve.se > 0))
        return fit_exponential(curve, curve.se if usable else None)
    if model == FitModel.OSCILLATING:
        return fit_osc_exponential((curve.t, curve.coherence.real))
    if model == FitModel.ONE_OVER_E:
        return FitResult(
            model=str(model),
            params={"t": one_over_e_time(curve)},
            ci={},
            mse=0.0,
            converged=True,
            n_points=int(curve.t.size),
        )
    raise InvalidParameterError(f"no fit for model '{model}'")
