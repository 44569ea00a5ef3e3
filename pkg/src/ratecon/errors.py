"""Exception hierarchy and process exit codes."""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4
EXIT_IO = 5


class RateconError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RateconError):
    """Invalid configuration: bad metric declaration, missing dataset, bad value."""


class DataError(RateconError):
    """Malformed or inconsistent input data (parse errors, bad dimensions)."""


class InfeasibleError(RateconError):
    """No feasible starting point (or problem) was found.

    Carries the worst constraint index and the violation achieved by the
    best candidate examined.
    """

    def __init__(self, message: str, constraint_index: int | None = None,
                 violation: float | None = None):
        super().__init__(message)
        self.constraint_index = constraint_index
        self.violation = violation


class SolverError(RateconError):
    """An iterative solver failed (iteration cap, numerical breakdown).

    ``best`` carries the best state or partial result available when the
    failure occurred, so callers can inspect or salvage it.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, (DataError, OSError)):
        return EXIT_IO
    return EXIT_SOLVER
