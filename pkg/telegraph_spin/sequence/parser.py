"""Recursive-descent parser and canonical printer for pulse-sequence text.

Grammar::

    seq   := item ('-' item)*
    item  := atom ('^' INT)?
    atom  := 'tau' | 'tau/' INT | NUMBER UNIT | '(pi)_' PHASE | MACRO '(' args ')'
    PHASE := 'x' | 'y' | '-x' | '-y' | NUMBER ['deg'] | NUMBER 'rad'

Columns in errors are 1-based.
"""

import logging
import re
from fractions import Fraction

from ..classes.schedule import (
    LiteralDelay,
    MacroCall,
    Phase,
    PiPulse,
    SequenceAst,
    SequenceItem,
    TauDelay,
)
from ..const import AXIS_DEGREES, ERROR_SYNTAX, MACROS, UNIT_SCALE_US
from ..exceptions import SequenceSyntaxError

_LOGGER = logging.getLogger(__name__)

_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_INTEGER = re.compile(r"\d+")
_NAME = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_UNITS = sorted(UNIT_SCALE_US, key=len, reverse=True)
_AXES = sorted(AXIS_DEGREES, key=len, reverse=True)
_PULSE_PREFIX = "(pi)_"


class _Parser:
    """Cursor over the source text."""

    def __init__(self, text: str):
        """Initialise the class."""
        self._text = text
        self._pos = 0

    def _error(self, message: str, pos: int | None = None) -> SequenceSyntaxError:
        column = (self._pos if pos is None else pos) + 1
        _LOGGER.debug(ERROR_SYNTAX, column, message)
        return SequenceSyntaxError(column, message)

    def _skip_space(self):
        while self._pos < len(self._text) and self._text[self._pos].isspace():
            self._pos += 1

    def _at_end(self) -> bool:
        self._skip_space()
        return self._pos >= len(self._text)

    def _peek(self, literal: str) -> bool:
        return self._text.startswith(literal, self._pos)

    def _accept(self, literal: str) -> bool:
        self._skip_space()
        if self._peek(literal):
            self._pos += len(literal)
            return True
        return False

    def _expect(self, literal: str):
        if not self._accept(literal):
            raise self._error(f"expected '{literal}'")

    def _match(self, pattern: re.Pattern) -> str | None:
        found = pattern.match(self._text, self._pos)
        if found is None:
            return None
        self._pos = found.end()
        return found.group()

    def _integer(self, what: str) -> int:
        self._skip_space()
        text = self._match(_INTEGER)
        if text is None:
            raise self._error(f"expected {what}")
        value = int(text)
        if value < 1:
            raise self._error(f"{what} must be >= 1", self._pos - len(text))
        return value

    def parse(self) -> SequenceAst:
        if self._at_end():
            raise self._error("empty sequence")
        items = [self._item()]
        while not self._at_end():
            self._expect("-")
            items.append(self._item())
        return SequenceAst(tuple(items), self._text)

    def _item(self) -> SequenceItem:
        self._skip_space()
        start = self._pos
        node = self._atom()
        count = 1
        if self._accept("^"):
            count = self._integer("repeat count")
        return SequenceItem(node, count, (start + 1, self._pos))

    def _atom(self):
        if self._peek(_PULSE_PREFIX):
            self._pos += len(_PULSE_PREFIX)
            return PiPulse(self._phase())
        start = self._pos
        name = self._match(_NAME)
        if name == "tau":
            if self._accept("/"):
                return TauDelay(Fraction(1, self._integer("tau divisor")))
            return TauDelay(Fraction(1))
        if name is not None:
            if name not in MACROS:
                raise self._error(f"unknown macro '{name}'", start)
            return self._macro(name)
        number = self._match(_NUMBER)
        if number is None:
            raise self._error("expected a delay, a pulse or a macro")
        for unit in _UNITS:
            if self._peek(unit):
                self._pos += len(unit)
                value = float(number)
                if value < 0:
                    raise self._error("delay must be >= 0", start)
                return LiteralDelay(value, unit)
        raise self._error("expected a duration unit (ns, us, µs, ms, s)")

    def _phase(self) -> Phase:
        start = self._pos
        for axis in _AXES:
            if self._peek(axis):
                self._pos += len(axis)
                return Phase.from_degrees(AXIS_DEGREES[axis])
        number = self._match(_NUMBER)
        if number is None:
            raise self._error("malformed phase", start)
        if self._peek("rad"):
            self._pos += len("rad")
            return Phase.from_radians(float(number))
        if self._peek("deg"):
            self._pos += len("deg")
        return Phase.from_degrees(Fraction(number))

    def _macro(self, name: str) -> MacroCall:
        self._expect("(")
        args = []
        if name == "CPMG":
            args.append(self._integer("pulse count"))
            if self._accept(","):
                self._skip_space()
                args.append(self._phase())
        elif name == "KDD":
            self._skip_space()
            args.append(self._phase())
        else:
            self._skip_space()
            if not self._peek(")"):
                args.append(self._integer("cycle count"))
        self._expect(")")
        return MacroCall(name, tuple(args))


def parse(text: str) -> SequenceAst:
    """Parse sequence text."""
    ast = _Parser(text).parse()
    _LOGGER.debug("Parsed %s items from '%s'", len(ast.items), text)
    return ast


def print_ast(ast: SequenceAst) -> str:
    """Return the canonical text of a parsed sequence."""
    return "-".join(item.canonical() for item in ast.items)
