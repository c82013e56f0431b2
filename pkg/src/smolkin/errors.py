"""Exception hierarchy shared by every module.

The CLI maps :class:`DomainError` to a configuration failure and every
:class:`NumericError` to a numeric failure.
"""

from __future__ import annotations


class SmolkinError(Exception):
    """Base class for all package errors."""


class DomainError(SmolkinError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """A special function was evaluated at one of its poles."""

    def __init__(self, message: str, pole: complex | float | None = None):
        super().__init__(message)
        self.pole = pole


class NumericError(SmolkinError, RuntimeError):
    """A numerical procedure failed to reach its target accuracy."""


class QuadratureError(NumericError):
    """Adaptive quadrature did not converge.

    The best available estimate and its error bound are attached so callers
    can decide whether to accept a degraded answer.
    """

    def __init__(self, message: str, value: complex | float, error: float):
        super().__init__(f"{message} (estimate={value!r}, error bound={error:.3e})")
        self.value = value
        self.error = error


class TailError(NumericError):
    """A truncated series or integral has a tail above tolerance."""

    def __init__(self, message: str, required: float | int | None = None):
        super().__init__(message)
        self.required = required


class BracketError(NumericError):
    """A bracket did not contain exactly one sign change."""


class EventCapError(NumericError):
    """A stochastic simulation exceeded its event budget."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(SmolkinError, ValueError):
    """A run configuration could not be parsed or failed validation."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line
