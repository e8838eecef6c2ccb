"""Electron-nuclear register types."""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

NUCLEAR_SPIN = 1


def spin_operators(spin: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (Sx, Sy, Sz) with basis ordered m = s, s-1, ..., -s."""
    s = Fraction(spin).limit_denominator(2)
    m = [s - k for k in range(int(2 * s) + 1)]
    raising = np.zeros((len(m), len(m)), dtype=complex)
    for column in range(1, len(m)):
        value = m[column]
        raising[column - 1, column] = np.sqrt(float(s * (s + 1) - value * (value + 1)))
    lowering = raising.conj().T
    return (
        (raising + lowering) / 2,
        (raising - lowering) / 2j,
        np.diag([float(value) for value in m]).astype(complex),
    )


def magnetic_levels(spin: float) -> tuple[float, ...]:
    """Return m = s, s-1, ..., -s."""
    count = int(round(2 * spin)) + 1
    return tuple(spin - k for k in range(count))


@dataclass(frozen=True, eq=False)
class RegisterHamiltonian:
    """Electron spin S coupled to a spin-1 nucleus (angular frequencies, rad/us)."""

    spin: float
    zfs: float = 0.0
    omega_e: float = 0.0
    omega_n: float = 0.0
    hyperfine: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        """Check the electron spin and freeze the tensor."""
        if self.spin not in (0.5, 1.0):
            raise ValueError(f"electron spin must be 1/2 or 1, got {self.spin}")
        tensor = np.array(self.hyperfine, dtype=complex)
        if tensor.shape != (3, 3):
            raise ValueError(f"hyperfine tensor must be 3x3, got {tensor.shape}")
        tensor.setflags(write=False)
        object.__setattr__(self, "hyperfine", tensor)

    @property
    def electron_dim(self) -> int:
        """Return 2S+1."""
        return int(round(2 * self.spin)) + 1

    @property
    def nuclear_dim(self) -> int:
        """Return 2I+1."""
        return 2 * NUCLEAR_SPIN + 1

    @property
    def dim(self) -> int:
        """Return the register dimension."""
        return self.electron_dim * self.nuclear_dim

    def matrix(self) -> np.ndarray:
        """Return H on electron (x) nucleus."""
        electron = spin_operators(self.spin)
        nuclear = spin_operators(NUCLEAR_SPIN)
        eye_e = np.eye(self.electron_dim)
        eye_n = np.eye(self.nuclear_dim)
        s_z = electron[2]
        hamiltonian = np.kron(self.omega_e * s_z, eye_n)
        if self.spin == 1.0:
            hamiltonian = hamiltonian + np.kron(self.zfs * s_z @ s_z, eye_n)
        hamiltonian = hamiltonian + np.kron(eye_e, self.omega_n * nuclear[2])
        for i in range(3):
            for j in range(3):
                if self.hyperfine[i, j] != 0:
                    hamiltonian = hamiltonian + self.hyperfine[i, j] * np.kron(
                        electron[i], nuclear[j]
                    )
        return hamiltonian


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Row-major vectorised Lindblad generator."""

    matrix: np.ndarray
    hamiltonian: RegisterHamiltonian
    t1: float
    jump_operators: tuple[np.ndarray, ...] = ()

    @property
    def dim(self) -> int:
        """Return the register dimension d (the superoperator is d**2 square)."""
        return self.hamiltonian.dim
