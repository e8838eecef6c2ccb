"""Errors raised by telegraph_spin."""


class TelegraphSpinError(Exception):
    """Base error."""


class InvalidParameterError(TelegraphSpinError, ValueError):
    """A parameter is outside its documented range."""


class ConfigValidationError(TelegraphSpinError):
    """Run configuration failed validation."""

    def __init__(self, path: str, message: str) -> None:
        """Initialise the error."""
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class DefectiveBlockError(TelegraphSpinError):
    """Per-cycle block could not be diagonalised."""


class NoCrossingError(TelegraphSpinError):
    """Coherence never reached 1/e."""


class ScheduleInfeasibleError(TelegraphSpinError):
    """Pulse windows overlap or leave no room for delays."""


class UnknownTransitionError(TelegraphSpinError):
    """Pulse target has no meaning for the register."""


class SequenceSyntaxError(TelegraphSpinError):
    """Sequence text could not be parsed."""

    def __init__(self, column: int, message: str) -> None:
        """Initialise the error."""
        super().__init__(f"column {column}: {message}")
        self.column = column
        self.message = message


class CorruptFileError(TelegraphSpinError):
    """Persisted file could not be read."""

    def __init__(self, path, line: int, message: str) -> None:
        """Initialise the error."""
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
        self.message = message


class FitConvergenceError(TelegraphSpinError):
    """Least-squares fit failed."""


class ToleranceExceededError(TelegraphSpinError):
    """Engines disagree beyond the requested tolerance."""
