"""Pulse schedule and sequence syntax tree types."""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..const import TWO_PI, UNIT_SCALE_US, Drive


def format_number(value: float | int | Fraction) -> str:
    """Return the shortest text that parses back to value."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        as_float = float(value)
        if Fraction(repr(as_float)) == value:
            return repr(as_float)
        return str(value)
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class Phase:
    """Pulse phase, exact in multiples of pi when possible."""

    turns: Fraction | None = None
    radians_value: float | None = None

    def __post_init__(self):
        """Normalise to [0, 2pi)."""
        if self.turns is not None:
            object.__setattr__(self, "turns", Fraction(self.turns) % 2)
        elif self.radians_value is not None:
            object.__setattr__(self, "radians_value", self.radians_value % TWO_PI)
        else:
            raise ValueError("phase needs turns or radians")

    @classmethod
    def from_degrees(cls, degrees) -> "Phase":
        """Return an exact phase from degrees."""
        return cls(turns=Fraction(degrees) / 180)

    @classmethod
    def from_radians(cls, radians: float) -> "Phase":
        """Return a floating phase from radians."""
        return cls(radians_value=float(radians))

    @property
    def exact(self) -> bool:
        """Return True for rational multiples of pi."""
        return self.turns is not None

    @property
    def radians(self) -> float:
        """Return the phase in radians."""
        if self.turns is not None:
            return float(self.turns) * math.pi
        return self.radians_value

    def shifted(self, other: "Phase") -> "Phase":
        """Return the sum of two phases."""
        if self.exact and other.exact:
            return Phase(turns=self.turns + other.turns)
        return Phase.from_radians(self.radians + other.radians)

    def canonical(self) -> str:
        """Return the canonical text form."""
        if self.turns is not None:
            degrees = self.turns * 180
            text = format_number(degrees)
            if "/" not in text:
                return text
        return f"{format_number(self.radians)}rad"


@dataclass(frozen=True)
class TauDelay:
    """A delay of fraction * tau."""

    fraction: Fraction

    def canonical(self) -> str:
        """Return the canonical text form."""
        return "tau" if self.fraction == 1 else f"tau/{self.fraction.denominator}"


@dataclass(frozen=True)
class LiteralDelay:
    """A delay with explicit units."""

    value: float
    unit: str

    @property
    def duration_us(self) -> float:
        """Return the duration in us."""
        return self.value * UNIT_SCALE_US[self.unit]

    def canonical(self) -> str:
        """Return the canonical text form."""
        return f"{format_number(self.value)}{self.unit}"


@dataclass(frozen=True)
class PiPulse:
    """A pi pulse about an in-plane axis."""

    phase: Phase

    def canonical(self) -> str:
        """Return the canonical text form."""
        return f"(pi)_{self.phase.canonical()}"


@dataclass(frozen=True)
class MacroCall:
    """A macro invocation."""

    name: str
    args: tuple[int | Phase, ...] = ()

    def canonical(self) -> str:
        """Return the canonical text form."""
        args = ",".join(
            arg.canonical() if isinstance(arg, Phase) else str(arg) for arg in self.args
        )
        return f"{self.name}({args})"


SequenceNode = TauDelay | LiteralDelay | PiPulse | MacroCall


@dataclass(frozen=True)
class SequenceItem:
    """A node with its repeat count and 1-based source span."""

    node: SequenceNode
    count: int = 1
    span: tuple[int, int] = (0, 0)

    def canonical(self) -> str:
        """Return the canonical text form."""
        text = self.node.canonical()
        return text if self.count == 1 else f"{text}^{self.count}"


@dataclass(frozen=True)
class SequenceAst:
    """Parsed sequence."""

    items: tuple[SequenceItem, ...]
    source: str = ""


@dataclass(frozen=True)
class DelayEvent:
    """Free evolution."""

    duration: float


@dataclass(frozen=True)
class PulseEvent:
    """Instantaneous pi pulse with a nominal window of width around center."""

    phase: float
    target: Drive
    width: float = 0.0
    center: float = 0.0
    phase_turns: Fraction | None = field(default=None, compare=False)


ScheduleEvent = DelayEvent | PulseEvent


@dataclass(frozen=True)
class PulseSchedule:
    """Flat timed list of delays and pulses."""

    events: tuple[ScheduleEvent, ...]
    cycle_pulses: int = 1

    @classmethod
    def from_events(cls, events, cycle_pulses: int = 1) -> "PulseSchedule":
        """Build a schedule, placing each pulse center after the preceding delays."""
        now = 0.0
        placed = []
        for event in events:
            if isinstance(event, DelayEvent):
                now += event.duration
                placed.append(event)
            else:
                placed.append(
                    PulseEvent(
                        phase=event.phase,
                        target=Drive(event.target),
                        width=event.width,
                        center=now,
                        phase_turns=event.phase_turns,
                    )
                )
        return cls(tuple(placed), max(1, cycle_pulses))

    @classmethod
    def free(cls, duration: float) -> "PulseSchedule":
        """Return a schedule with no pulses."""
        return cls((DelayEvent(duration),))

    @property
    def pulses(self) -> tuple[PulseEvent, ...]:
        """Return the pulses in order."""
        return tuple(event for event in self.events if isinstance(event, PulseEvent))

    @property
    def n_pulses(self) -> int:
        """Return the pulse count."""
        return len(self.pulses)

    @property
    def total_duration(self) -> float:
        """Return the summed delays."""
        return math.fsum(
            event.duration for event in self.events if isinstance(event, DelayEvent)
        )

    @property
    def pulse_centers(self) -> np.ndarray:
        """Return the pulse centers."""
        return np.array([pulse.center for pulse in self.pulses], dtype=float)

    def cycle_ends(self) -> np.ndarray:
        """Return the time closing each repeating unit of cycle_pulses pulses."""
        centers = self.pulse_centers
        total = self.total_duration
        if centers.size == 0:
            return np.array([total])
        ends = []
        for last in range(self.cycle_pulses - 1, centers.size, self.cycle_pulses):
            if last + 1 < centers.size:
                ends.append(0.5 * (centers[last] + centers[last + 1]))
            else:
                ends.append(total)
        if centers.size % self.cycle_pulses:
            ends.append(total)
        return np.array(ends)
