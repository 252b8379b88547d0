"""Exception hierarchy shared by the engine and the CLI."""

from __future__ import annotations


class PiOptionsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PiOptionsError, ValueError):
    """An input failed validation.

    ``field`` names the offending parameter so the CLI can map it back to a flag.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class PayoffDomainError(ValidationError):
    """The power ``m**a * s**b`` overflowed or was otherwise non-finite."""


class InsufficientDataError(ValidationError):
    pass


class CsvFormatError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message, field="csv")
        self.line = line


class BudgetExceededError(PiOptionsError):
    """The requested tree has more leaves than the configured node budget."""


class NumericalError(PiOptionsError):
    """A simulation produced a non-finite aggregate."""
