"""Macro expansion, timing validation and schedule text export."""

import logging
import math
from fractions import Fraction

from ..classes.results import Finding, ValidationReport
from ..classes.schedule import (
    DelayEvent,
    LiteralDelay,
    MacroCall,
    Phase,
    PiPulse,
    PulseEvent,
    PulseSchedule,
    SequenceAst,
    TauDelay,
)
from ..const import (
    AXIS_DEGREES,
    ERROR_SCHEDULE_INFEASIBLE,
    TWO_PI,
    XY16_AXES,
    Drive,
    Severity,
)
from ..exceptions import CorruptFileError, ScheduleInfeasibleError

_LOGGER = logging.getLogger(__name__)

CYCLE_PULSES = {"CPMG": 1, "KDD": 5, "KDDXY16": 80}
KDD_OFFSETS = (30, 0, 90, 0, 30)
CYCLE_HEADER = "# cycle_pulses"

CODE_NEGATIVE_DELAY = "NEGATIVE_DELAY"
CODE_NON_MONOTONIC = "NON_MONOTONIC"
CODE_WINDOW_OVERLAP = "WINDOW_OVERLAP"
CODE_DD_EFFECTIVE = "DD_EFFECTIVE"
CODE_DD_MARGINAL = "DD_MARGINAL"
CODE_DD_INEFFECTIVE = "DD_INEFFECTIVE"

_HALF = Fraction(1, 2)


class _Delay:
    """Delay accumulated as an exact multiple of tau plus literal microseconds."""

    def __init__(self):
        """Initialise the class."""
        self.tau_fraction = Fraction(0)
        self.literal_us: list[float] = []

    def duration(self, tau: float) -> float:
        return math.fsum([float(self.tau_fraction) * tau, *self.literal_us])


def _pulse_train(phases):
    """Yield tau/2, P, tau, P, ..., P, tau/2 tokens for the given phases."""
    for index, phase in enumerate(phases):
        yield _HALF if index == 0 else Fraction(1)
        yield phase
    yield _HALF


def _kdd_tokens(phase: Phase):
    return _pulse_train([phase.shifted(Phase.from_degrees(k)) for k in KDD_OFFSETS])


def _macro_tokens(call: MacroCall):
    if call.name == "CPMG":
        n_pulses = call.args[0]
        phase = call.args[1] if len(call.args) > 1 else Phase.from_degrees(AXIS_DEGREES["y"])
        return list(_pulse_train([phase] * n_pulses))
    if call.name == "KDD":
        return list(_kdd_tokens(call.args[0]))
    cycles = call.args[0] if call.args else 1
    tokens = []
    for _ in range(cycles):
        for shift in (0, 180):
            for axis in XY16_AXES:
                tokens.extend(_kdd_tokens(Phase.from_degrees(AXIS_DEGREES[axis] + shift)))
    return tokens


def _node_tokens(node):
    if isinstance(node, TauDelay):
        return [node.fraction]
    if isinstance(node, LiteralDelay):
        return [node.duration_us]
    if isinstance(node, PiPulse):
        return [node.phase]
    return _macro_tokens(node)


def cycle_pulses(ast: SequenceAst) -> int:
    """Return the pulses in one repeating unit of the sequence."""
    if len(ast.items) == 1 and isinstance(ast.items[0].node, MacroCall):
        return CYCLE_PULSES[ast.items[0].node.name]
    per_repeat = 0
    for item in ast.items:
        node = item.node
        if isinstance(node, PiPulse):
            per_repeat += item.count
        elif isinstance(node, MacroCall):
            per_repeat += item.count * sum(
                isinstance(token, Phase) for token in _macro_tokens(node)
            )
    return max(1, per_repeat)


def expand(
    ast: SequenceAst,
    tau: float,
    pulse_width: float = 0.0,
    target: Drive | str = Drive.QUBIT,
    repeats: int = 1,
) -> PulseSchedule:
    """Flatten macros into a timed schedule (tau and pulse_width in us).

    Adjacent delays are merged, so concatenated blocks keep a uniform tau
    spacing across block boundaries.
    """
    if not tau > pulse_width:
        raise ScheduleInfeasibleError(
            ERROR_SCHEDULE_INFEASIBLE % f"tau {tau} us must exceed pulse width {pulse_width} us"
        )
    if repeats < 1:
        raise ScheduleInfeasibleError(ERROR_SCHEDULE_INFEASIBLE % f"repeats {repeats} < 1")
    target = Drive(target)
    tokens = []
    for item in ast.items:
        tokens.extend(_node_tokens(item.node) * item.count)
    tokens = tokens * repeats

    events = []
    pending = None
    for token in tokens:
        if isinstance(token, Phase):
            if pending is not None:
                events.append(DelayEvent(pending.duration(tau)))
                pending = None
            events.append(
                PulseEvent(token.radians, target, pulse_width, phase_turns=token.turns)
            )
            continue
        if pending is None:
            pending = _Delay()
        if isinstance(token, Fraction):
            pending.tau_fraction += token
        else:
            pending.literal_us.append(token)
    if pending is not None:
        events.append(DelayEvent(pending.duration(tau)))

    schedule = PulseSchedule.from_events(events, cycle_pulses(ast))
    report = validate(schedule)
    if not report.ok:
        messages = "; ".join(
            item.message for item in report.findings if item.severity == Severity.ERROR
        )
        raise ScheduleInfeasibleError(ERROR_SCHEDULE_INFEASIBLE % messages)
    _LOGGER.debug(
        "Expanded '%s': %s pulses over %s us",
        ast.source,
        schedule.n_pulses,
        schedule.total_duration,
    )
    return schedule


def _advisory(x: float) -> Finding:
    if x <= 1.0:
        return Finding(
            Severity.INFO, CODE_DD_EFFECTIVE, f"2*pi*A*tau = {x:.3g}: decoupling effective"
        )
    if x <= math.pi:
        return Finding(
            Severity.INFO,
            CODE_DD_MARGINAL,
            f"2*pi*A*tau = {x:.3g}: marginal regime, decoupling gain reduced",
        )
    return Finding(
        Severity.WARNING,
        CODE_DD_INEFFECTIVE,
        f"2*pi*A*tau = {x:.3g}: pulse spacing too long, decoupling ineffective",
    )


def validate(schedule: PulseSchedule, hyperfine_mhz: float | None = None) -> ValidationReport:
    """Check delays, pulse ordering and window overlap of a schedule.

    With hyperfine_mhz, the shortest pulse spacing is also rated against the
    coupling strength.
    """
    findings = []
    for index, event in enumerate(schedule.events):
        if isinstance(event, DelayEvent) and event.duration < 0:
            findings.append(
                Finding(
                    Severity.ERROR,
                    CODE_NEGATIVE_DELAY,
                    f"event {index}: negative delay {event.duration} us",
                )
            )
    pulses = schedule.pulses
    if pulses and pulses[0].center < pulses[0].width / 2:
        findings.append(
            Finding(
                Severity.ERROR,
                CODE_WINDOW_OVERLAP,
                f"pulse 0 window starts before t=0 (center {pulses[0].center} us)",
            )
        )
    min_spacing = math.inf
    for index, (first, second) in enumerate(zip(pulses, pulses[1:], strict=False)):
        spacing = second.center - first.center
        min_spacing = min(min_spacing, spacing)
        if spacing <= 0:
            findings.append(
                Finding(
                    Severity.ERROR,
                    CODE_NON_MONOTONIC,
                    f"pulse {index + 1} center does not follow pulse {index}",
                )
            )
        elif spacing < (first.width + second.width) / 2:
            findings.append(
                Finding(
                    Severity.ERROR,
                    CODE_WINDOW_OVERLAP,
                    f"pulses {index} and {index + 1} overlap (spacing {spacing} us)",
                )
            )
    advisory_x = None
    if hyperfine_mhz is not None and math.isfinite(min_spacing):
        advisory_x = TWO_PI * hyperfine_mhz * min_spacing
        finding = _advisory(advisory_x)
        if finding.severity == Severity.WARNING:
            _LOGGER.warning("%s", finding.message)
        findings.append(finding)
    return ValidationReport(tuple(findings), min_spacing, advisory_x)


def export_schedule(schedule: PulseSchedule) -> str:
    """Return one event per line: 'D <us>' or 'P <phase_rad> <target> <width_us>'."""
    lines = []
    if schedule.cycle_pulses > 1:
        lines.append(f"{CYCLE_HEADER} {schedule.cycle_pulses}")
    for event in schedule.events:
        if isinstance(event, DelayEvent):
            lines.append(f"D {float(event.duration)!r}")
        else:
            lines.append(f"P {float(event.phase)!r} {event.target} {float(event.width)!r}")
    return "\n".join(lines) + "\n"


def parse_schedule_text(text: str, path: str = "<string>") -> PulseSchedule:
    """Read schedule text written by export_schedule."""
    events = []
    n_cycle = 1
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(CYCLE_HEADER):
            try:
                n_cycle = int(stripped[len(CYCLE_HEADER) :])
            except ValueError as err:
                raise CorruptFileError(path, line_number, "bad cycle header") from err
            continue
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        try:
            if fields[0] == "D" and len(fields) == 2:
                events.append(DelayEvent(float(fields[1])))
            elif fields[0] == "P" and len(fields) == 4:
                events.append(PulseEvent(float(fields[1]), Drive(fields[2]), float(fields[3])))
            else:
                raise ValueError(f"unrecognised event '{stripped}'")
        except ValueError as err:
            raise CorruptFileError(path, line_number, str(err)) from err
    return PulseSchedule.from_events(events, n_cycle)
