"""Joint T1/T2* model comparison and cross-engine deviation checks."""

import logging
import math
from collections.abc import Mapping, Sequence

import numpy as np

from ..classes.results import DecayCurve, ModelRow
from ..const import ERROR_TOLERANCE, FIT_MAX_STARTS
from ..exceptions import FitConvergenceError, InvalidParameterError, ToleranceExceededError
from ..helpers.pool import ordered_map
from .fitting import covariance, refine, t_quantile, unpack_points

_LOGGER = logging.getLogger(__name__)

DEFAULT_RATIOS = (1.5, 2.0, 1.0, None)
FREE_RATIO_SEEDS = (0.5, 1.0, 1.5, 2.0, 3.0)


def _exp_offset(t, y, decay):
    basis = np.column_stack([np.exp(-t / decay), np.ones_like(t)])
    coefficients, *_ = np.linalg.lstsq(basis, y, rcond=None)
    residual = basis @ coefficients - y
    return coefficients, float(residual @ residual)


def _fit_model(model_id: int, ratio: float | None, t1_data, t2_data) -> ModelRow:
    (t_1, y_1), (t_2, y_2) = t1_data, t2_data
    free = ratio is None
    n_points = t_1.size + t_2.size

    def residuals(x):
        a_1, c_1, a_2, c_2, log_t1 = x[:5]
        t1 = math.exp(log_t1)
        t2 = t1 * (math.exp(x[5]) if free else ratio)
        return np.concatenate(
            [
                a_1 * np.exp(-t_1 / t1) + c_1 - y_1,
                a_2 * np.exp(-t_2 / t2) + c_2 - y_2,
            ]
        )

    span = max(float(np.ptp(t_1)), float(np.ptp(t_2)))
    grid = np.geomspace(span / 100.0, 10.0 * span, FIT_MAX_STARTS // len(FREE_RATIO_SEEDS))
    starts = []
    for seed_ratio in FREE_RATIO_SEEDS if free else (ratio,):
        for t1 in grid:
            (a_1, c_1), cost_1 = _exp_offset(t_1, y_1, t1)
            (a_2, c_2), cost_2 = _exp_offset(t_2, y_2, seed_ratio * t1)
            x0 = [a_1, c_1, a_2, c_2, math.log(t1)]
            if free:
                x0.append(math.log(seed_ratio))
            starts.append((cost_1 + cost_2, np.array(x0)))
    result = refine(f"model {model_id}", residuals, starts)

    variance, cov = covariance(result, n_points)
    errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    scale = t_quantile(n_points - result.x.size)
    t1 = math.exp(result.x[4])
    sigma_t1 = t1 * errors[4]
    if free:
        fitted_ratio = math.exp(result.x[5])
        ratio_ci = scale * fitted_ratio * errors[5]
    else:
        fitted_ratio, ratio_ci = ratio, 0.0
    return ModelRow(
        model_id=model_id,
        ratio=ratio,
        fitted_ratio=fitted_ratio,
        ratio_ci=ratio_ci,
        t1=t1,
        t1_ci=scale * sigma_t1,
        sigma_t1=sigma_t1,
        mse=variance,
    )


def joint_model_compare(
    t1_points,
    t2_points,
    models: Sequence[float | None] = DEFAULT_RATIOS,
) -> list[ModelRow]:
    """Fit both datasets with a shared T1 and T2* = ratio * T1 per model.

    A ratio of None is fitted freely. Rows keep the order of models; a
    model that does not converge yields a flagged row.
    """
    t1_data = unpack_points(t1_points)
    t2_data = unpack_points(t2_points)
    for name, (t, _) in (("t1_points", t1_data), ("t2_points", t2_data)):
        if t.size < 3:
            raise InvalidParameterError(f"{name} needs at least 3 points")
    for ratio in models:
        if ratio is not None and not ratio > 0:
            raise InvalidParameterError(f"ratio must be > 0, got {ratio}")

    def row(item):
        model_id, ratio = item
        try:
            return _fit_model(model_id, ratio, t1_data, t2_data)
        except FitConvergenceError as err:
            _LOGGER.debug("Model %s flagged: %s", model_id, err)
            nan = math.nan
            return ModelRow(model_id, ratio, nan, nan, nan, nan, nan, nan, converged=False)

    rows = ordered_map(row, list(enumerate(models, start=1)))
    for item in rows:
        _LOGGER.debug(
            "Model %s (ratio %s): T1 %.6g, sigma %.3g, MSE %.3g",
            item.model_id,
            item.ratio,
            item.t1,
            item.sigma_t1,
            item.mse,
        )
    return rows


def best_model(rows: Sequence[ModelRow], fixed_only: bool = True) -> ModelRow:
    """Return the converged row with the smallest MSE."""
    candidates = [
        row for row in rows if row.converged and not (fixed_only and row.free)
    ]
    if not candidates:
        raise FitConvergenceError("no converged model")
    return min(candidates, key=lambda row: (row.mse, row.model_id))


def _deviation(first: DecayCurve, second: DecayCurve) -> float:
    if first.t.shape != second.t.shape or not np.allclose(first.t, second.t):
        raise InvalidParameterError(
            f"engines '{first.engine}' and '{second.engine}' use different time grids"
        )
    return float(np.max(np.abs(first.magnitude - second.magnitude)))


def engine_deviations(
    curves: Mapping[str, DecayCurve], tolerance: float | None = None
) -> dict[tuple[str, str], float]:
    """Return the max |magnitude| deviation per engine pair.

    With a tolerance, the first pair beyond it raises ToleranceExceededError.
    """
    if len(curves) < 2:
        raise InvalidParameterError("comparison needs at least two engines")
    names = list(curves)
    deviations = {}
    for i, first in enumerate(names):
        for second in names[i + 1 :]:
            deviations[(first, second)] = _deviation(curves[first], curves[second])
    if tolerance is not None:
        for (first, second), value in deviations.items():
            if value > tolerance:
                raise ToleranceExceededError(ERROR_TOLERANCE % (first, second, value, tolerance))
    return deviations


def standard_error_ratio(reference: DecayCurve, estimate: DecayCurve) -> float:
    """Return max ||estimate| - |reference|| / SE over samples with SE > 0."""
    if estimate.se is None:
        raise InvalidParameterError(f"engine '{estimate.engine}' carries no standard error")
    mask = estimate.se > 0
    difference = np.abs(estimate.magnitude - reference.magnitude)[mask]
    if not np.any(mask):
        return 0.0
    return float(np.max(difference / estimate.se[mask]))
