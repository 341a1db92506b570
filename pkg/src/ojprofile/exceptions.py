"""Exception hierarchy.

Everything raised on bad user input derives from :class:`ValidationError`, which the
CLI maps to exit status 1. Anything else escaping a command is an internal error.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Input rejected by a documented validation rule."""


class LogParseError(ValidationError):
    """A submission log row violates the log contract."""

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class DeadlineError(LogParseError):
    """A submission timestamp falls after its assignment deadline."""


class ConfigError(ValidationError):
    pass


class DegenerateFeatureError(ValidationError):
    """A real-valued descriptor has zero spread in the fitting data."""

    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"feature {feature!r} has zero variance; cannot standardize")


class SingleClassError(ValidationError):
    """Training data holds a single class where two are required."""


class InfeasibleArchetypeError(ValidationError):
    pass


class UnknownNameError(ValidationError):
    """Unknown preset, algorithm, feature or plot kind."""
