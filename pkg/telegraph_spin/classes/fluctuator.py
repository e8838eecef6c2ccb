"""Fluctuator parameter and probability-vector types."""

import math
from dataclasses import dataclass

import numpy as np

from ..const import ERROR_LEVELS, LEVEL_SETS, Basis
from ..exceptions import InvalidParameterError

# Rows map level occupancies (ordered as LEVEL_SETS) onto the probability-vector basis.
OCCUPANCY_TO_VECTOR = {
    2: np.array([[1.0, 1.0], [-1.0, 1.0]]),
    3: np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]]),
}
VECTOR_TO_OCCUPANCY = {
    levels: np.linalg.inv(matrix) for levels, matrix in OCCUPANCY_TO_VECTOR.items()
}


def _frozen(matrix) -> np.ndarray:
    array = np.array(matrix, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FluctuatorParams:
    """Jump rate and coupling of a 2- or 3-level fluctuator.

    gamma is the pairwise jump rate in 1/us and v the phase velocity of the
    +1 level in rad/us.
    """

    levels: int
    gamma: float
    v: float

    def __post_init__(self):
        """Check ranges."""
        if self.levels not in LEVEL_SETS:
            raise InvalidParameterError(ERROR_LEVELS % self.levels)
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise InvalidParameterError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not math.isfinite(self.v) or self.v < 0:
            raise InvalidParameterError(f"v must be finite and >= 0, got {self.v}")

    @property
    def basis(self) -> Basis:
        """Return the probability-vector basis."""
        return Basis.TWO_LEVEL if self.levels == 2 else Basis.THREE_LEVEL

    @property
    def level_set(self) -> tuple[int, ...]:
        """Return the fluctuator levels in occupancy order."""
        return LEVEL_SETS[self.levels]

    @property
    def t1(self) -> float:
        """Return the relaxation time in us."""
        if self.gamma == 0:
            return math.inf
        return 1.0 / (self.levels * self.gamma)

    @property
    def hyperfine_hz(self) -> float:
        """Return the hyperfine coupling in MHz."""
        if self.levels == 2:
            return self.v / math.pi
        return self.v / (2.0 * math.pi)

    @property
    def exit_rate(self) -> float:
        """Return the total rate of leaving any level."""
        return (self.levels - 1) * self.gamma

    def velocity(self, level: int) -> float:
        """Return the phase velocity while the fluctuator sits in level."""
        return level * self.v


@dataclass(frozen=True, eq=False)
class ProbVector:
    """Fourier-space probability vector at k=-1.

    Entries are (P, p) for two levels and (P, p_plus, p) for three levels.
    """

    basis: Basis
    entries: np.ndarray

    def __post_init__(self):
        """Freeze the entries."""
        entries = _frozen(self.entries)
        expected = 2 if self.basis == Basis.TWO_LEVEL else 3
        if entries.shape != (expected,):
            raise InvalidParameterError(
                f"{self.basis} vector needs {expected} entries, got {entries.shape}"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def levels(self) -> int:
        """Return the number of fluctuator levels."""
        return self.entries.shape[0]

    @property
    def coherence(self) -> complex:
        """Return the qubit coherence."""
        return complex(self.entries[0])

    def as_array(self) -> np.ndarray:
        """Return a writable copy of the entries."""
        return np.array(self.entries)

    def occupancies(self) -> dict[int, complex]:
        """Return the coherence carried by each fluctuator level."""
        values = VECTOR_TO_OCCUPANCY[self.levels] @ self.entries
        return {
            level: complex(value)
            for level, value in zip(LEVEL_SETS[self.levels], values, strict=True)
        }

    @classmethod
    def from_occupancies(cls, levels: int, occupancies) -> "ProbVector":
        """Build a vector from per-level values ordered as the level set."""
        entries = OCCUPANCY_TO_VECTOR[levels] @ np.asarray(occupancies, dtype=complex)
        basis = Basis.TWO_LEVEL if levels == 2 else Basis.THREE_LEVEL
        return cls(basis, entries)


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Evolution matrix of the probability vector at k=-1."""

    matrix: np.ndarray

    def __post_init__(self):
        """Freeze the matrix."""
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def dim(self) -> int:
        """Return the matrix dimension."""
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        """Return the eigenvalues."""
        return np.linalg.eigvals(self.matrix)


@dataclass(frozen=True, eq=False)
class PulseOperator:
    """Instantaneous pi pulse acting on the probability vector."""

    drive: str
    matrix: np.ndarray

    def __post_init__(self):
        """Freeze the matrix."""
        object.__setattr__(self, "matrix", _frozen(self.matrix))
