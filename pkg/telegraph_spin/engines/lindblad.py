"""Lindblad master equation for the electron-nuclear register."""

import logging
import math
from collections.abc import Sequence

import numpy as np

from ..classes.register import (
    NUCLEAR_SPIN,
    Liouvillian,
    RegisterHamiltonian,
    magnetic_levels,
)
from ..classes.results import DecayCurve
from ..classes.schedule import PulseSchedule
from ..const import (
    DEFAULT_FIELD_GAUSS,
    DEFAULT_ZFS_MHZ,
    ELECTRON_GYRO_MHZ_PER_G,
    EQUILIBRIUM,
    ERROR_INVALID_DENSITY,
    ERROR_NON_HERMITIAN,
    ERROR_TRANSITION,
    HERMITICITY_TOLERANCE,
    N14_GYRO_MHZ_PER_G,
    RESYMMETRIZE_WARN,
    TWO_PI,
    WARN_RESYMMETRIZED,
    Drive,
)
from ..exceptions import InvalidParameterError, UnknownTransitionError
from ..helpers.linalg import PropagatorCache, mat_exp, propagate_piecewise

_LOGGER = logging.getLogger(__name__)

DEFAULT_MI_PAIR = (0, 1)


def register_hamiltonian(
    levels: int,
    hyperfine_hz: float,
    zfs_mhz: float = DEFAULT_ZFS_MHZ,
    field_gauss: float = DEFAULT_FIELD_GAUSS,
    hyperfine_tensor: np.ndarray | None = None,
) -> RegisterHamiltonian:
    """Return the register Hamiltonian matching a 2- or 3-level fluctuator.

    The default hyperfine tensor is secular with A_zz = 2 pi A.
    """
    if levels not in (2, 3):
        raise InvalidParameterError(f"levels must be 2 or 3, got {levels}")
    if hyperfine_tensor is None:
        hyperfine_tensor = np.diag([0.0, 0.0, TWO_PI * hyperfine_hz])
    return RegisterHamiltonian(
        spin=0.5 if levels == 2 else 1.0,
        zfs=TWO_PI * zfs_mhz if levels == 3 else 0.0,
        omega_e=TWO_PI * ELECTRON_GYRO_MHZ_PER_G * field_gauss,
        omega_n=TWO_PI * N14_GYRO_MHZ_PER_G * field_gauss,
        hyperfine=hyperfine_tensor,
    )


def _electron_index(h: RegisterHamiltonian, m_s: float) -> int:
    levels = magnetic_levels(h.spin)
    for index, value in enumerate(levels):
        if math.isclose(value, m_s):
            return index
    raise UnknownTransitionError(ERROR_TRANSITION % f"m_S={m_s}")


def _nuclear_index(m_i: int) -> int:
    if m_i not in (-1, 0, 1):
        raise InvalidParameterError(f"nuclear level must be -1, 0 or +1, got {m_i}")
    return NUCLEAR_SPIN - m_i


def build_liouvillian(h: RegisterHamiltonian, t1: float) -> Liouvillian:
    """Return the row-major Liouvillian with electron jumps between all level pairs."""
    if math.isnan(t1) or t1 <= 0:
        raise InvalidParameterError(f"t1 must be > 0, got {t1}")
    hamiltonian = h.matrix()
    deviation = float(np.max(np.abs(hamiltonian - hamiltonian.conj().T)))
    if deviation > HERMITICITY_TOLERANCE:
        raise InvalidParameterError(ERROR_NON_HERMITIAN % deviation)
    dim = h.dim
    eye = np.eye(dim)
    liouvillian = -1j * (np.kron(hamiltonian, eye) - np.kron(eye, hamiltonian.T))
    jumps = []
    if not math.isinf(t1):
        electron_dim = h.electron_dim
        amplitude = 1.0 / math.sqrt(electron_dim * t1)
        for target in range(electron_dim):
            for source in range(electron_dim):
                if target == source:
                    continue
                flip = np.zeros((electron_dim, electron_dim))
                flip[target, source] = amplitude
                jump = np.kron(flip, np.eye(h.nuclear_dim))
                product = jump.conj().T @ jump
                liouvillian = liouvillian + (
                    np.kron(jump, jump.conj())
                    - 0.5 * np.kron(product, eye)
                    - 0.5 * np.kron(eye, product.T)
                )
                jumps.append(jump)
    _LOGGER.debug("Liouvillian: dim %s, %s jump operators", dim * dim, len(jumps))
    return Liouvillian(liouvillian, h, t1, tuple(jumps))


def check_density(rho: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Return rho as an array after checking it is a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidParameterError(ERROR_INVALID_DENSITY % f"shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise InvalidParameterError(ERROR_INVALID_DENSITY % f"dimension {rho.shape[0]}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOLERANCE:
        raise InvalidParameterError(ERROR_INVALID_DENSITY % "not Hermitian")
    if abs(np.trace(rho) - 1.0) > HERMITICITY_TOLERANCE:
        raise InvalidParameterError(ERROR_INVALID_DENSITY % "trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -HERMITICITY_TOLERANCE:
        raise InvalidParameterError(ERROR_INVALID_DENSITY % "not positive semidefinite")
    return rho


def _restore(vector: np.ndarray, dim: int) -> np.ndarray:
    rho = vector.reshape(dim, dim)
    deviation = float(np.max(np.abs(rho - rho.conj().T)))
    if deviation > RESYMMETRIZE_WARN:
        _LOGGER.warning(WARN_RESYMMETRIZED, deviation)
    else:
        _LOGGER.debug(WARN_RESYMMETRIZED, deviation)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def propagate(l: Liouvillian, rho0: np.ndarray, t: float) -> np.ndarray:  # noqa: E741
    """Return rho(t) = exp(L t) rho0."""
    rho0 = check_density(rho0, l.dim)
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t}")
    return _restore(mat_exp(l.matrix, t) @ rho0.reshape(-1), l.dim)


def nuclear_coherence(
    rho: np.ndarray,
    mI_pair: tuple[int, int] = DEFAULT_MI_PAIR,  # noqa: N803
    omega_n: float = 0.0,
    t: float = 0.0,
) -> complex:
    """Return <a| Tr_e(rho) |b> with the nuclear Larmor rotation removed."""
    rho = np.asarray(rho, dtype=complex)
    nuclear_dim = 2 * NUCLEAR_SPIN + 1
    electron_dim = rho.shape[0] // nuclear_dim
    reduced = np.einsum(
        "iaib->ab", rho.reshape(electron_dim, nuclear_dim, electron_dim, nuclear_dim)
    )
    a, b = mI_pair
    value = reduced[_nuclear_index(a), _nuclear_index(b)]
    return complex(value * np.exp(1j * omega_n * (a - b) * t))


def initial_density(
    h: RegisterHamiltonian,
    init_state,
    mI_pair: tuple[int, int] = DEFAULT_MI_PAIR,  # noqa: N803
    electron_state: np.ndarray | None = None,
) -> np.ndarray:
    """Return electron (x) equal nuclear superposition of the mI pair.

    init_state is a fluctuator level (m_S = level * S) or "eq"; electron_state
    overrides it with an arbitrary electron density matrix.
    """
    electron_dim = h.electron_dim
    if electron_state is not None:
        electron = check_density(electron_state, electron_dim)
    elif init_state == EQUILIBRIUM:
        electron = np.eye(electron_dim) / electron_dim
    else:
        electron = np.zeros((electron_dim, electron_dim), dtype=complex)
        index = _electron_index(h, int(init_state) * h.spin)
        electron[index, index] = 1.0
    nuclear = np.zeros(h.nuclear_dim, dtype=complex)
    for m_i in mI_pair:
        nuclear[_nuclear_index(m_i)] = 1.0 / math.sqrt(2.0)
    return np.kron(electron, np.outer(nuclear, nuclear.conj()))


def _swap_unitary(dim: int, first: int, second: int, phase: float) -> np.ndarray:
    unitary = np.eye(dim, dtype=complex)
    unitary[first, first] = unitary[second, second] = 0.0
    unitary[first, second] = -1j * np.exp(-1j * phase)
    unitary[second, first] = -1j * np.exp(1j * phase)
    return unitary


def pulse_unitary(
    h: RegisterHamiltonian,
    target: Drive | str,
    phase: float = 0.0,
    mI_pair: tuple[int, int] = DEFAULT_MI_PAIR,  # noqa: N803
) -> np.ndarray:
    """Return the pi rotation of a pulse on the register."""
    target = Drive(target)
    eye_e, eye_n = np.eye(h.electron_dim), np.eye(h.nuclear_dim)
    if target == Drive.QUBIT:
        first, second = (_nuclear_index(m_i) for m_i in mI_pair)
        return np.kron(eye_e, _swap_unitary(h.nuclear_dim, first, second, phase))
    if target == Drive.DQ:
        pair = (h.spin, -h.spin)
    elif h.spin == 1.0:
        pair = (0.0, 1.0 if target == Drive.SQ_PLUS else -1.0)
    else:
        raise UnknownTransitionError(ERROR_TRANSITION % target)
    first, second = (_electron_index(h, m_s) for m_s in pair)
    return np.kron(_swap_unitary(h.electron_dim, first, second, phase), eye_n)


def lindblad_free(
    l: Liouvillian,  # noqa: E741
    rho0: np.ndarray,
    times: Sequence[float],
    mI_pair: tuple[int, int] = DEFAULT_MI_PAIR,  # noqa: N803
) -> DecayCurve:
    """Return the free nuclear coherence normalised to its t=0 value."""
    return lindblad_dd(l, rho0, PulseSchedule.free(float(np.max(times))), mI_pair, times)


def lindblad_dd(
    l: Liouvillian,  # noqa: E741
    rho0: np.ndarray,
    schedule: PulseSchedule,
    mI_pair: tuple[int, int] = DEFAULT_MI_PAIR,  # noqa: N803
    times: Sequence[float] | None = None,
) -> DecayCurve:
    """Return the nuclear coherence under instantaneous pulses, sampled at cycle ends.

    Values are normalised to the t=0 coherence.
    """
    rho0 = check_density(rho0, l.dim)
    h = l.hamiltonian
    if times is None:
        times = schedule.cycle_ends()
    times = np.asarray(times, dtype=float)
    unitaries = []
    for pulse in schedule.pulses:
        unitary = pulse_unitary(h, pulse.target, pulse.phase, mI_pair)
        unitaries.append(np.kron(unitary, unitary.conj()))
    reference = nuclear_coherence(rho0, mI_pair)
    if reference == 0:
        raise InvalidParameterError("initial state carries no coherence on the mI pair")
    cache = PropagatorCache(l.matrix)
    values = []
    for t, vector in zip(
        times,
        propagate_piecewise(
            rho0.reshape(-1), schedule.pulse_centers, unitaries, times, cache
        ),
        strict=True,
    ):
        rho = vector.reshape(l.dim, l.dim)
        values.append(nuclear_coherence(rho, mI_pair, h.omega_n, t) / reference)
    _LOGGER.debug("lindblad_dd: %s samples, %s cached propagators", times.size, len(cache))
    return DecayCurve(
        t=times,
        coherence=np.array(values),
        engine="lindblad",
        provenance={"spin": h.spin, "t1": l.t1, "mi_pair": list(mI_pair)},
    )
