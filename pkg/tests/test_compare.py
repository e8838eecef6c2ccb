"""Test the joint model comparison and the engine deviation checks."""

import math

import numpy as np
import pytest

from telegraph_spin.analysis import compare
from telegraph_spin.analysis.compare import (
    best_model,
    engine_deviations,
    joint_model_compare,
    standard_error_ratio,
)
from telegraph_spin.classes.results import DecayCurve, ModelRow
from telegraph_spin.exceptions import (
    FitConvergenceError,
    InvalidParameterError,
    ToleranceExceededError,
)

from .const import SEED, T1_US

T1_TIMES = np.linspace(0.0, 40.0, 40)
T2_TIMES = np.linspace(0.0, 80.0, 40)


def _planted(rng, ratio: float = 2.0, noise: float = 0.02):
    t1_points = (T1_TIMES, np.exp(-T1_TIMES / T1_US) + rng.normal(0.0, noise, T1_TIMES.size))
    t2_points = (
        T2_TIMES,
        np.exp(-T2_TIMES / (ratio * T1_US)) + rng.normal(0.0, noise, T2_TIMES.size),
    )
    return t1_points, t2_points


def test_recovers_planted_ratio() -> None:
    """Test that the planted ratio has the lowest MSE in most replicates."""
    rng = np.random.default_rng(SEED)
    wins = 0
    for _ in range(100):
        rows = joint_model_compare(*_planted(rng), models=(1.5, 2.0, 1.0))
        wins += best_model(rows).model_id == 2
    assert wins >= 95


def test_rows_with_free_ratio() -> None:
    """Test the default model set and the free-ratio row."""
    rows = joint_model_compare(*_planted(np.random.default_rng(SEED)))
    assert [row.model_id for row in rows] == [1, 2, 3, 4]
    assert [row.ratio for row in rows] == [1.5, 2.0, 1.0, None]
    free = rows[3]
    assert free.free
    assert free.fitted_ratio == pytest.approx(2.0, rel=0.15)
    assert free.ratio_ci > 0
    assert rows[1].t1 == pytest.approx(T1_US, rel=0.05)
    assert rows[1].t1_ci > rows[1].sigma_t1 > 0
    assert rows[1].ratio_ci == 0.0


def test_flagged_model(monkeypatch) -> None:
    """Test that a failing model yields a flagged row."""
    fit_model = compare._fit_model

    def failing(model_id, ratio, t1_data, t2_data):
        if ratio == 1.0:
            raise FitConvergenceError("no convergence")
        return fit_model(model_id, ratio, t1_data, t2_data)

    monkeypatch.setattr(compare, "_fit_model", failing)
    rows = joint_model_compare(*_planted(np.random.default_rng(SEED)), models=(2.0, 1.0))
    assert rows[0].converged
    assert not rows[1].converged
    assert math.isnan(rows[1].mse)
    assert best_model(rows).model_id == 1


def test_no_converged_model() -> None:
    """Test best_model without candidates."""
    nan = math.nan
    row = ModelRow(1, 2.0, nan, nan, nan, nan, nan, nan, converged=False)
    with pytest.raises(FitConvergenceError):
        best_model([row])


@pytest.mark.parametrize("models", [(0.0,), (-1.0, 2.0)])
def test_invalid_ratio(models) -> None:
    """Test the ratio check."""
    with pytest.raises(InvalidParameterError):
        joint_model_compare(*_planted(np.random.default_rng(SEED)), models=models)


def test_too_few_points() -> None:
    """Test the point count check."""
    short = (np.array([0.0, 1.0]), np.array([1.0, 0.5]))
    with pytest.raises(InvalidParameterError, match="at least 3"):
        joint_model_compare(short, short)


def _curve(engine: str, values, t=None, se=None) -> DecayCurve:
    values = np.asarray(values, dtype=complex)
    t = np.arange(values.size, dtype=float) if t is None else t
    return DecayCurve(t=t, coherence=values, engine=engine, se=se)


def test_engine_deviations() -> None:
    """Test pairwise deviations and the tolerance."""
    curves = {
        "analytic": _curve("analytic", [1.0, 0.5, 0.25]),
        "lindblad": _curve("lindblad", [1.0, 0.5j, 0.2501]),
        "mc": _curve("mc", [1.0, 0.52, 0.25]),
    }
    deviations = engine_deviations(curves)
    assert list(deviations) == [
        ("analytic", "lindblad"),
        ("analytic", "mc"),
        ("lindblad", "mc"),
    ]
    assert deviations[("analytic", "lindblad")] == pytest.approx(1e-4)
    assert deviations[("analytic", "mc")] == pytest.approx(0.02)
    with pytest.raises(ToleranceExceededError, match="'analytic' and 'mc'"):
        engine_deviations(curves, tolerance=1e-3)


def test_engine_deviations_rejects() -> None:
    """Test engine count and grid checks."""
    first = _curve("analytic", [1.0, 0.5])
    with pytest.raises(InvalidParameterError):
        engine_deviations({"analytic": first})
    other = _curve("lindblad", [1.0, 0.5], t=np.array([0.0, 2.0]))
    with pytest.raises(InvalidParameterError, match="different time grids"):
        engine_deviations({"analytic": first, "lindblad": other})


def test_standard_error_ratio() -> None:
    """Test the deviation in standard errors, skipping zero errors."""
    reference = _curve("analytic", [1.0, 0.5, 0.25])
    estimate = _curve("mc", [1.0, 0.53, 0.2], se=np.array([0.0, 0.01, 0.01]))
    assert standard_error_ratio(reference, estimate) == pytest.approx(5.0)
    with pytest.raises(InvalidParameterError):
        standard_error_ratio(reference, reference)
