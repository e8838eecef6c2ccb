"""Test the semi-analytic engine."""

import math

import numpy as np
import pytest

from telegraph_spin.classes.results import EigenReport
from telegraph_spin.const import EQUILIBRIUM, Drive
from telegraph_spin.engines.analytic import (
    CycleBlock,
    closed_form_2lf,
    coherence_curve,
    coherence_dd,
    coherence_free,
    coherence_schedule,
    effective_t2,
    eigen_report,
    free_decay_curve,
    free_t2star,
    pulse_operator,
    schedule_decay_curve,
    strong_limit_t2star,
    sweep_t2_vs_tau,
    t2_rate_2lf,
    weak_t2star_3lf,
)
from telegraph_spin.engines.model import make_params, occupancy_basis_change
from telegraph_spin.exceptions import DefectiveBlockError, InvalidParameterError
from telegraph_spin.helpers.utils import crossing_time, reverse_envelope

from .const import (
    HYPERFINE_MHZ,
    SEED,
    STRONG_RATIO,
    T1_US,
    T2_FAST_FLIP_US,
    T2_PREDICTED_US,
    TAU_200_NS,
    TAU_600_NS,
    VERY_STRONG_RATIO,
    hyperfine_for_ratio,
)
from .helpers.utils import relative_error


def test_free_coherence_starts_at_one(params_3lf) -> None:
    """Test C(0) = 1 for every initial state."""
    for init_state in (-1, 0, 1, EQUILIBRIUM):
        assert coherence_free(params_3lf, init_state, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("levels", [2, 3])
def test_coherence_bounded(levels) -> None:
    """Test |C| <= 1 on random parameters."""
    rng = np.random.default_rng(SEED)
    times = np.linspace(0.0, 50.0, 101)
    for _ in range(20):
        params = make_params(levels, rng.uniform(0.5, 50.0), rng.uniform(0.0, 5.0))
        magnitudes = np.abs(coherence_curve(params, -1, times))
        assert magnitudes.max() <= 1.0 + 1e-9


@pytest.mark.parametrize(
    ("levels", "ratio"),
    # 3LF fast modes shift the crossing by about 1% at v/gamma = 100
    [(2, STRONG_RATIO), (3, VERY_STRONG_RATIO)],
)
def test_strong_coupling_free_decay(levels, ratio) -> None:
    """Test T2* -> 2 T1 (2LF) and 1.5 T1 (3LF) for strong coupling."""
    params = make_params(levels, T1_US, hyperfine_for_ratio(levels, T1_US, ratio))
    expected = strong_limit_t2star(levels, T1_US)
    assert relative_error(free_t2star(params, -1), expected) < 0.01


def test_strong_limit_values() -> None:
    """Test the strong-coupling limits."""
    assert strong_limit_t2star(2, T1_US) == pytest.approx(20.0)
    assert strong_limit_t2star(3, T1_US) == pytest.approx(15.0)
    with pytest.raises(InvalidParameterError):
        strong_limit_t2star(4, T1_US)


def test_free_decay_curve_envelope(params_2lf) -> None:
    """Test that the sampled envelope crosses 1/e at free_t2star."""
    t2star = free_t2star(params_2lf, -1)
    times = np.linspace(0.0, 3.0 * t2star, 3001)
    curve = free_decay_curve(params_2lf, -1, times)
    assert curve.engine == "analytic"
    crossing = crossing_time(times, reverse_envelope(curve.magnitude))
    assert relative_error(crossing, t2star) < 1e-3


def test_predicted_t2_at_200_ns(params_2lf) -> None:
    """Test the 2LF T2 under pulses spaced 200 ns."""
    t2 = effective_t2(params_2lf, -1, Drive.QUBIT, TAU_200_NS)
    assert relative_error(t2, T2_PREDICTED_US) < 0.02
    assert relative_error(t2, 1.0 / t2_rate_2lf(params_2lf, TAU_200_NS)) < 1e-3


def test_fast_flip_t2_at_600_ns(params_2lf) -> None:
    """Test the 2LF T2 under pulses spaced 600 ns."""
    t2 = effective_t2(params_2lf, -1, Drive.QUBIT, TAU_600_NS)
    assert t2 < 20.0
    assert relative_error(t2, 1.0 / t2_rate_2lf(params_2lf, TAU_600_NS)) < 0.02
    assert relative_error(t2, T2_FAST_FLIP_US) < 0.02


def test_single_quantum_ceiling(strong_3lf) -> None:
    """Test that SQ pulses at best double the free T2* from level 0."""
    tau = 1e-3 / strong_3lf.v
    free = free_t2star(strong_3lf, 0)
    for drive in (Drive.SQ_PLUS, Drive.SQ_MINUS):
        pulsed = effective_t2(strong_3lf, 0, drive, tau)
        assert free / pulsed == pytest.approx(0.5, abs=0.02)


def test_double_quantum_extends_3lf(params_3lf) -> None:
    """Test that DQ pulses at short spacing beat the free decay."""
    free = free_t2star(params_3lf, -1)
    pulsed = effective_t2(params_3lf, -1, Drive.DQ, 0.01)
    assert pulsed > 5.0 * free


def test_closed_form_matches_eigenstructure() -> None:
    """Test the 2LF closed forms against the numeric decomposition."""
    rng = np.random.default_rng(SEED)
    for _ in range(100):
        gamma = math.exp(rng.uniform(math.log(0.01), 0.0))
        v = math.exp(rng.uniform(math.log(0.01), math.log(10.0)))
        tau = math.exp(rng.uniform(math.log(0.01), math.log(2.0)))
        params = make_params(2, 1.0 / (2.0 * gamma), v / math.pi)
        init_state = int(rng.choice([-1, 1]))
        report = eigen_report(params, init_state, Drive.QUBIT, tau)
        eigenvalues, coefficients = closed_form_2lf(params, tau, float(init_state))
        np.testing.assert_allclose(report.eigenvalues, eigenvalues, atol=1e-9)
        np.testing.assert_allclose(report.coefficients, coefficients, atol=1e-9)
        assert t2_rate_2lf(params, tau) == pytest.approx(report.rates[0], rel=1e-9)


@pytest.mark.parametrize(
    ("levels", "drive", "init_state"),
    [
        (2, Drive.QUBIT, -1),
        (2, Drive.DQ, EQUILIBRIUM),
        (3, Drive.DQ, -1),
        (3, Drive.SQ_PLUS, 0),
        (3, Drive.SQ_MINUS, 1),
    ],
)
def test_eigen_reconstruction(cpmg, levels, drive, init_state) -> None:
    """Test sum c_i lambda_i**n against direct propagation."""
    params = make_params(levels, T1_US, HYPERFINE_MHZ)
    report = eigen_report(params, init_state, drive, TAU_600_NS)
    assert not report.degenerate
    assert np.all(np.diff(report.eigenvalues.real) <= 1e-12)
    for n_pulses in (1, 7, 50):
        schedule = cpmg(n_pulses, TAU_600_NS, drive)
        direct = coherence_schedule(params, init_state, schedule)[-1]
        assert abs(report.reconstruct(n_pulses) - direct) < 1e-8


def test_block_matches_dd(params_2lf) -> None:
    """Test the cycle block against repeated application."""
    block = CycleBlock(params_2lf, -1, Drive.QUBIT, TAU_200_NS)
    assert block.coherence(0) == pytest.approx(1.0)
    assert coherence_dd(params_2lf, -1, Drive.QUBIT, TAU_200_NS, 0) == pytest.approx(1.0)
    state = block.x0.entries
    for _ in range(10):
        state = block.matrix @ state
    assert block.coherence(10) == pytest.approx(state[0], abs=1e-12)


def test_weak_formula_tracks_numeric_t2star() -> None:
    """Test the 3LF slowest-mode T2* against the sampled envelope."""
    for ratio in (0.01, 0.1, 10.0):
        params = make_params(3, T1_US, hyperfine_for_ratio(3, T1_US, ratio))
        assert relative_error(weak_t2star_3lf(params), free_t2star(params, -1)) < 0.1


def test_weak_formula_strong_limit() -> None:
    """Test that the slowest-mode rate tends to 2 gamma."""
    params = make_params(3, T1_US, hyperfine_for_ratio(3, T1_US, VERY_STRONG_RATIO))
    assert relative_error(1.0 / weak_t2star_3lf(params), 2.0 * params.gamma) < 0.005


def test_weak_formula_needs_3lf(params_2lf) -> None:
    """Test the level check."""
    with pytest.raises(InvalidParameterError):
        weak_t2star_3lf(params_2lf)


@pytest.mark.parametrize("levels", [2, 3])
def test_pulse_operators_are_involutions(levels) -> None:
    """Test U @ U = 1 for every drive."""
    drives = (Drive.QUBIT, Drive.DQ) if levels == 2 else tuple(Drive)
    for drive in drives:
        matrix = pulse_operator(levels, drive).matrix
        np.testing.assert_allclose(matrix @ matrix, np.eye(levels), atol=1e-15)


@pytest.mark.parametrize(
    ("drive", "order"),
    [(Drive.SQ_PLUS, [0, 2, 1]), (Drive.SQ_MINUS, [1, 0, 2])],
)
def test_single_quantum_operator_is_occupancy_swap(drive, order) -> None:
    """Test SQ+ and SQ- as swaps of the 0 occupancy with the +1 and -1 occupancies."""
    swap = np.eye(3)[order]
    change = occupancy_basis_change(3)
    expected = change @ swap @ np.linalg.inv(change)
    np.testing.assert_allclose(pulse_operator(3, drive).matrix, expected, atol=1e-12)


@pytest.mark.parametrize("drive", [Drive.SQ_PLUS, Drive.SQ_MINUS])
def test_single_quantum_block_is_contractive(params_3lf, drive) -> None:
    """Test that SQ cycles never grow the coherence."""
    for init_state in (-1, 0, 1):
        report = eigen_report(params_3lf, init_state, drive, TAU_200_NS)
        assert np.all(np.abs(report.eigenvalues) <= 1.0 + 1e-12)
        block = CycleBlock(params_3lf, init_state, drive, TAU_200_NS)
        assert abs(block.coherence(2000)) <= 1.0


def test_single_quantum_needs_3lf() -> None:
    """Test that SQ drives are rejected for a 2LF."""
    with pytest.raises(InvalidParameterError, match="not defined"):
        pulse_operator(2, Drive.SQ_PLUS)


@pytest.mark.parametrize("tau", [0.0, -1.0, math.nan])
def test_invalid_tau(params_2lf, tau) -> None:
    """Test the spacing check."""
    with pytest.raises(InvalidParameterError):
        effective_t2(params_2lf, -1, Drive.QUBIT, tau)


def test_sweep_flags_missing_crossing() -> None:
    """Test that a static fluctuator is refocused indefinitely."""
    params = make_params(2, math.inf, HYPERFINE_MHZ)
    rows = sweep_t2_vs_tau(params, Drive.QUBIT, [TAU_200_NS], max_cycles=64)
    assert rows[0].t2 is None
    assert rows[0].flag == "no_crossing"


def test_sweep_rows_keep_order(params_2lf) -> None:
    """Test one row per spacing in input order."""
    rows = sweep_t2_vs_tau(params_2lf, Drive.QUBIT, [TAU_600_NS, TAU_200_NS])
    assert [row.tau for row in rows] == [TAU_600_NS, TAU_200_NS]
    assert rows[1].t2 > rows[0].t2
    assert all(row.flag == "ok" for row in rows)



def test_schedule_curve_matches_cycle_block(params_2lf, cpmg) -> None:
    """Test piecewise propagation against the cycle block."""
    curve = schedule_decay_curve(params_2lf, -1, cpmg(12, TAU_600_NS))
    assert curve.t.size == 12
    assert curve.t[-1] == pytest.approx(12 * TAU_600_NS)
    expected = coherence_dd(params_2lf, -1, Drive.QUBIT, TAU_600_NS, 12)
    assert curve.coherence[-1] == pytest.approx(expected, abs=1e-10)


def test_defective_block_reconstruct() -> None:
    """Test a defective block refuses modal reconstruction."""
    report = EigenReport(
        tau=0.2,
        eigenvalues=np.array([0.5, 0.5]),
        coefficients=np.array([np.nan, np.nan]),
        degenerate=True,
        condition=1e12,
    )
    with pytest.raises(DefectiveBlockError, match="defective"):
        report.reconstruct(3)
