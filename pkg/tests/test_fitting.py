"""Test the decay fits."""

import logging
import math

import numpy as np
import pytest

from telegraph_spin.analysis.fitting import (
    fit_curve,
    fit_exponential,
    fit_osc_exponential,
    one_over_e_time,
    spectral_peaks,
    unpack_points,
)
from telegraph_spin.classes.results import DecayCurve, FitResult
from telegraph_spin.exceptions import FitConvergenceError, InvalidParameterError
from telegraph_spin.helpers.filemgmt import fit_report_text

from .const import SEED
from .helpers.utils import data_file, relative_error

TIMES = np.linspace(0.0, 40.0, 81)


def test_exponential_exact() -> None:
    """Test noise-free recovery of a*exp(-t/T) + c."""
    y = 0.9 * np.exp(-TIMES / 12.0) + 0.05
    fit = fit_exponential((TIMES, y))
    assert fit.model == "exp"
    assert fit.converged
    assert relative_error(fit.t, 12.0) < 1e-6
    assert fit.params["a"] == pytest.approx(0.9, rel=1e-6)
    assert fit.params["c"] == pytest.approx(0.05, abs=1e-6)
    assert fit.n_points == TIMES.size


def test_exponential_noisy() -> None:
    """Test recovery, interval and residual variance with 1% noise."""
    rng = np.random.default_rng(SEED)
    y = np.exp(-TIMES / 10.0) + rng.normal(0.0, 0.01, TIMES.size)
    fit = fit_exponential(np.column_stack([TIMES, y]))
    assert relative_error(fit.t, 10.0) < 0.05
    assert 0.0 < fit.ci["t"] < 2.0
    assert fit.mse == pytest.approx(1e-4, rel=0.5)


def test_exponential_with_sigma() -> None:
    """Test that weights are accepted and validated."""
    y = np.exp(-TIMES / 5.0)
    fit = fit_exponential((TIMES, y), sigma=np.full(TIMES.size, 0.01))
    assert relative_error(fit.t, 5.0) < 1e-6
    with pytest.raises(InvalidParameterError, match="sigma"):
        fit_exponential((TIMES, y), sigma=0.0)


def test_oscillating_exact() -> None:
    """Test noise-free recovery of the oscillating model."""
    y = np.exp(-TIMES / 8.0) * np.cos(2.0 * TIMES + 0.3)
    fit = fit_osc_exponential((TIMES, y))
    assert fit.model == "osc"
    assert fit.params["omega"] == pytest.approx(2.0, rel=1e-4)
    assert relative_error(fit.t, 8.0) < 1e-4
    assert fit.params["phi"] == pytest.approx(0.3, abs=1e-3)
    assert fit.params["a"] == pytest.approx(1.0, rel=1e-4)


def test_oscillating_degrades_to_exponential() -> None:
    """Test the oscillating model on a plain exponential."""
    y = np.exp(-TIMES / 15.0)
    fit = fit_osc_exponential((TIMES, y))
    assert relative_error(fit.t, 15.0) < 0.02


def test_ambiguous_peak(caplog: pytest.LogCaptureFixture) -> None:
    """Test the warning for two comparable spectral peaks."""
    t = np.linspace(0.0, 60.0, 601)
    resolution = 2.0 * math.pi / (t.size * (t[1] - t[0]))
    y = np.exp(-t / 200.0) * (np.cos(10 * resolution * t) + np.cos(25 * resolution * t))
    fit = fit_osc_exponential((t, y))
    assert "Ambiguous oscillation frequency" in caplog.text
    assert any("Ambiguous" in note for note in fit.notes)


def test_spectral_peak() -> None:
    """Test the dominant angular frequency."""
    t = np.linspace(0.0, 100.0, 1001)
    peak, rival = spectral_peaks(t, np.cos(3.0 * t))
    assert peak == pytest.approx(3.0, rel=0.02)
    assert rival is None


def test_constant_data() -> None:
    """Test that flat data cannot be fitted."""
    with pytest.raises(FitConvergenceError, match="constant data"):
        fit_exponential((TIMES, np.full(TIMES.size, 0.5)))


@pytest.mark.parametrize(("fitter", "count"), [(fit_exponential, 3), (fit_osc_exponential, 7)])
def test_too_few_points(fitter, count) -> None:
    """Test the minimum point counts."""
    t = np.arange(count, dtype=float)
    with pytest.raises(InvalidParameterError, match="at least"):
        fitter((t, np.exp(-t)))


@pytest.mark.parametrize(
    "points",
    [np.ones((4, 3)), (np.ones(3), np.ones(4)), (np.array([0.0, math.nan]), np.ones(2))],
)
def test_bad_points(points) -> None:
    """Test the point checks."""
    with pytest.raises(InvalidParameterError):
        unpack_points(points)


def test_one_over_e_time() -> None:
    """Test the log-linear crossing on an exponential."""
    assert one_over_e_time((TIMES, np.exp(-TIMES / 5.0))) == pytest.approx(5.0, rel=1e-12)


def test_fit_curve_models(caplog: pytest.LogCaptureFixture) -> None:
    """Test fitting a decay curve with each model."""
    caplog.set_level(logging.DEBUG)
    coherence = np.exp(-TIMES / 6.0) * np.exp(0.5j * TIMES)
    curve = DecayCurve(t=TIMES, coherence=coherence, engine="analytic")
    assert relative_error(fit_curve(curve, "exp").t, 6.0) < 1e-6
    assert fit_curve(curve, "1/e").t == pytest.approx(6.0, rel=1e-12)
    osc = fit_curve(curve, "osc")
    assert osc.params["omega"] == pytest.approx(0.5, rel=1e-4)
    with pytest.raises(InvalidParameterError):
        fit_curve(curve, "none")


def test_fit_report_golden() -> None:
    """Test the fit report layout."""
    result = FitResult(
        model="exp",
        params={"a": 1.0, "t": 12.5, "c": 0.0},
        ci={"a": 0.01, "t": 0.25, "c": 0.005},
        mse=0.0001,
        converged=True,
        n_points=41,
    )
    with open(data_file("fit_report.yaml"), encoding="utf8") as file:
        assert fit_report_text([result]) == file.read()
