"""Fluctuator trace types."""

from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidParameterError


@dataclass(frozen=True)
class RtnTrace:
    """One realisation of fluctuator jumps.

    levels[i] is occupied between jump_times[i - 1] and jump_times[i].
    """

    jump_times: tuple[float, ...]
    levels: tuple[int, ...]
    horizon: float
    seed: int | None = None
    stream: int = 0
    t_p: float | None = None
    terminal_flip: bool = False
    merged_pulses: tuple[int, ...] = ()

    def __post_init__(self):
        """Check ordering and level alternation."""
        if len(self.levels) != len(self.jump_times) + 1:
            raise InvalidParameterError(
                f"{len(self.jump_times)} jumps need {len(self.jump_times) + 1} levels"
            )
        times = np.asarray(self.jump_times, dtype=float)
        if times.size and (
            np.any(np.diff(times) <= 0) or times[0] <= 0 or times[-1] >= self.horizon
        ):
            raise InvalidParameterError("jump times must increase inside (0, horizon)")
        if any(a == b for a, b in zip(self.levels, self.levels[1:])):
            raise InvalidParameterError("adjacent segments occupy the same level")

    @property
    def n_jumps(self) -> int:
        """Return the jump count."""
        return len(self.jump_times)

    @property
    def initial_level(self) -> int:
        """Return the level at t=0."""
        return self.levels[0]

    @property
    def final_level(self) -> int:
        """Return the level at the horizon."""
        return self.levels[-1]

    def level_at(self, times) -> np.ndarray:
        """Return the occupied level at each time."""
        index = np.searchsorted(self.jump_times, np.asarray(times, dtype=float), "right")
        return np.asarray(self.levels)[index]

    def as_record(self) -> dict:
        """Return the persisted form."""
        return {
            "seed": self.seed,
            "stream": self.stream,
            "horizon": self.horizon,
            "t_p": self.t_p,
            "initial_level": self.initial_level,
            "jumps": [
                [time, level]
                for time, level in zip(self.jump_times, self.levels[1:], strict=True)
            ],
            "terminal_flip": self.terminal_flip,
            "merged_pulses": list(self.merged_pulses),
        }

    @classmethod
    def from_record(cls, record: dict) -> "RtnTrace":
        """Build a trace from its persisted form."""
        jumps = record["jumps"]
        return cls(
            jump_times=tuple(float(time) for time, _ in jumps),
            levels=(record["initial_level"], *(int(level) for _, level in jumps)),
            horizon=record["horizon"],
            seed=record["seed"],
            stream=record["stream"],
            t_p=record["t_p"],
            terminal_flip=record["terminal_flip"],
            merged_pulses=tuple(record["merged_pulses"]),
        )


@dataclass(frozen=True)
class TraceEnsemble:
    """Fixed-count set of engineered flip traces."""

    traces: tuple[RtnTrace, ...]
    t_p: float
    horizon: float
    seed: int
    t1_target: float
    n_discarded: int = 0
    n_merged: int = 0

    @property
    def n_traces(self) -> int:
        """Return the retained trace count."""
        return len(self.traces)

    @property
    def discard_rate(self) -> float:
        """Return the fraction of generated traces that were discarded."""
        generated = self.n_discarded + self.n_traces
        return self.n_discarded / generated if generated else 0.0

    def header(self) -> dict:
        """Return the persisted ensemble header."""
        return {
            "n_traces": self.n_traces,
            "t_p": self.t_p,
            "horizon": self.horizon,
            "seed": self.seed,
            "t1_target": self.t1_target,
            "n_discarded": self.n_discarded,
            "n_merged": self.n_merged,
        }
