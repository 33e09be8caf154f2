"""Exception types raised across the package."""

from __future__ import annotations


class QCAError(Exception):
    """Base class for every error raised by diracqca."""


class NormalizationError(QCAError, ValueError):
    pass


class DomainError(QCAError, ValueError):
    pass


class DivisibilityError(QCAError, ValueError):
    pass


class BoundaryError(QCAError, RuntimeError):
    """Raised in strict mode when the light cone touches the wrap-around point."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class ScheduleError(QCAError, ValueError):
    pass


class StateError(QCAError, ValueError):
    pass


class SizeError(QCAError, ValueError):
    pass


class ResolutionError(QCAError, ValueError):
    pass


class FitError(QCAError, ValueError):
    pass


class ConfigError(QCAError, ValueError):
    """Invalid experiment configuration; ``violations`` lists every problem found."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")
