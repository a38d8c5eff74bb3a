"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class IsoPosteriorError(Exception):
    """Base class for every error raised by the package."""


class DomainError(IsoPosteriorError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParseError(IsoPosteriorError, ValueError):
    """A dataset or config file could not be parsed.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(IsoPosteriorError, RuntimeError):
    """A solver exhausted its iteration budget.

    The best iterate found and the remaining optimality gap are attached so
    that callers may decide to use it anyway.
    """

    def __init__(self, message: str, best=None, gap: float = float("nan")):
        self.best = best
        self.gap = gap
        super().__init__(f"{message} (gap={gap:.3g})")


class EstimationError(IsoPosteriorError, RuntimeError):
    """Posterior estimation is impossible for the given inputs."""
