"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class DecisiveError(Exception):
    """Base class for every error raised by this package."""


class InputError(DecisiveError, ValueError):
    """Malformed argument (missing binding, multivariate input, bad theta...)."""


class DomainError(DecisiveError, ValueError):
    """An operation was applied outside its precondition."""


class ModelError(DecisiveError, ValueError):
    """A counter machine failed validation."""


class ParseError(DecisiveError):
    """A DSL source could not be parsed; carries a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class InvariantViolation(DecisiveError, AssertionError):
    """An internal invariant that should hold by construction was broken."""


class BudgetExhausted(DecisiveError):
    """An exploration budget ran out before an exact answer was found."""
