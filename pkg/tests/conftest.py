# pylint: disable=redefined-outer-name
"""Global fixtures for telegraph_spin."""

import pytest

from telegraph_spin.const import ENV_THREADS
from telegraph_spin.engines.model import make_params
from telegraph_spin.sequence.expand import expand
from telegraph_spin.sequence.parser import parse

from .const import HYPERFINE_MHZ, T1_US, VERY_STRONG_RATIO, hyperfine_for_ratio


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    """Run the worker pool serially unless a test overrides it."""
    monkeypatch.setenv(ENV_THREADS, "1")


@pytest.fixture
def params_2lf():
    """Engineered-experiment 2LF."""
    return make_params(2, T1_US, HYPERFINE_MHZ)


@pytest.fixture
def params_3lf():
    """3LF with the engineered-experiment coupling."""
    return make_params(3, T1_US, HYPERFINE_MHZ)


@pytest.fixture
def strong_3lf():
    """3LF deep in the strong-coupling limit."""
    return make_params(3, T1_US, hyperfine_for_ratio(3, T1_US, VERY_STRONG_RATIO))


@pytest.fixture
def cpmg():
    """Return a factory for CPMG schedules (tau in us)."""

    def _cpmg(n_pulses: int, tau: float, drive: str = "qubit", width: float = 0.0):
        return expand(parse(f"CPMG({n_pulses})"), tau, width, drive)

    return _cpmg
