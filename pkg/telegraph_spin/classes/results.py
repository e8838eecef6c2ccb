"""Result containers shared by the engines, the fitters and the CLI."""

import dataclasses
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..const import ERROR_DEFECTIVE_BLOCK, Severity
from ..exceptions import DefectiveBlockError


def _frozen(values, dtype=None) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of a decay model."""

    model: str
    params: Mapping[str, float]
    ci: Mapping[str, float]
    mse: float
    converged: bool
    n_points: int
    notes: tuple[str, ...] = ()

    @property
    def t(self) -> float:
        """Return the fitted decay time."""
        return self.params["t"]

    def as_dict(self) -> dict[str, Any]:
        """Return the report with fixed field order."""
        return {
            "model": self.model,
            "converged": self.converged,
            "n_points": self.n_points,
            "mse": float(self.mse),
            "params": {key: float(value) for key, value in self.params.items()},
            "ci95": {key: float(value) for key, value in self.ci.items()},
            "notes": list(self.notes),
        }


@dataclass(frozen=True, eq=False)
class DecayCurve:
    """Sampled coherence with provenance."""

    t: np.ndarray
    coherence: np.ndarray
    engine: str
    provenance: Mapping[str, Any] = field(default_factory=dict)
    se: np.ndarray | None = None
    columns: Mapping[str, np.ndarray] = field(default_factory=dict)
    fits: tuple[FitResult, ...] = ()

    def __post_init__(self):
        """Freeze arrays."""
        object.__setattr__(self, "t", _frozen(self.t, float))
        object.__setattr__(self, "coherence", _frozen(self.coherence, complex))
        if self.coherence.shape != self.t.shape:
            raise ValueError("time and coherence arrays differ in shape")
        if self.se is not None:
            object.__setattr__(self, "se", _frozen(self.se, float))

    @property
    def magnitude(self) -> np.ndarray:
        """Return |coherence|."""
        return np.abs(self.coherence)

    def with_fit(self, fit: FitResult) -> "DecayCurve":
        """Return a copy with the fit attached."""
        return dataclasses.replace(self, fits=(*self.fits, fit))

    def table(self) -> dict[str, np.ndarray]:
        """Return the output columns in order."""
        table = {
            "t_us": self.t,
            "re": self.coherence.real,
            "im": self.coherence.imag,
            "abs": self.magnitude,
        }
        if self.se is not None:
            table["se"] = self.se
        table.update(self.columns)
        return table


@dataclass(frozen=True, eq=False)
class EigenReport:
    """Eigen decomposition of the per-cycle block."""

    tau: float
    eigenvalues: np.ndarray
    coefficients: np.ndarray
    degenerate: bool = False
    condition: float = 1.0

    @property
    def rates(self) -> np.ndarray:
        """Return -ln|lambda|/tau per eigenvalue."""
        with np.errstate(divide="ignore"):
            return -np.log(np.abs(self.eigenvalues)) / self.tau

    def reconstruct(self, n_cycles: int) -> complex:
        """Return sum_i c_i * lambda_i**n."""
        if self.degenerate:
            raise DefectiveBlockError(ERROR_DEFECTIVE_BLOCK % self.condition)
        return complex(np.sum(self.coefficients * self.eigenvalues**n_cycles))


@dataclass(frozen=True)
class SweepRow:
    """Effective coherence time at one pulse spacing."""

    tau: float
    t2: float | None
    flag: str = "ok"


@dataclass(frozen=True, eq=False)
class McResult:
    """Monte Carlo coherence estimate."""

    times: np.ndarray
    mean: np.ndarray
    by_level: Mapping[int, np.ndarray]
    occupancy: Mapping[int, np.ndarray]
    se: np.ndarray
    se_re: np.ndarray
    se_im: np.ndarray
    n_traj: int
    seed: int

    def curve(self, provenance: Mapping[str, Any] | None = None) -> DecayCurve:
        """Return the estimate as a decay curve."""
        return DecayCurve(
            t=self.times,
            coherence=self.mean,
            engine="mc",
            provenance=dict(provenance or {}, seed=self.seed, n_traj=self.n_traj),
            se=self.se,
        )


@dataclass(frozen=True)
class ModelRow:
    """One row of the joint model comparison."""

    model_id: int
    ratio: float | None
    fitted_ratio: float
    ratio_ci: float
    t1: float
    t1_ci: float
    sigma_t1: float
    mse: float
    converged: bool = True

    @property
    def free(self) -> bool:
        """Return True for the free-ratio model."""
        return self.ratio is None


@dataclass(frozen=True)
class Finding:
    """One schedule validation finding."""

    severity: Severity
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Findings of a schedule validation."""

    findings: tuple[Finding, ...] = ()
    min_spacing: float = math.inf
    advisory_x: float | None = None

    @property
    def ok(self) -> bool:
        """Return True when no error was found."""
        return not any(item.severity == Severity.ERROR for item in self.findings)

    def codes(self) -> list[str]:
        """Return the finding codes."""
        return [item.code for item in self.findings]
