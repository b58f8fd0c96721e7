"""Exception hierarchy shared by every module in the package."""

from __future__ import annotations


class CdisError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidArgument(CdisError, ValueError):
    """An argument violates an operation's precondition."""

    exit_code = 2


class MalformedGraph(CdisError, ValueError):
    """A graph violates a structural invariant (cycle, bad selection vertex, ...)."""

    exit_code = 3


class DataError(CdisError):
    """A dataset or file could not be parsed or is unusable."""

    exit_code = 3


class InsufficientData(DataError):
    """Too few samples for the requested test."""


class DegenerateConditioning(DataError):
    """The conditioning correlation submatrix is singular."""


class SelectionTooStrict(DataError):
    """Rejection sampling accepts too small a fraction of rows."""

    def __init__(self, message: str, selection_index: int | None = None):
        super().__init__(message)
        self.selection_index = selection_index


class OrientationConflict(CdisError):
    """Two sources of orientation information disagree on an endpoint mark."""

    exit_code = 4

    def __init__(self, message: str, edge: tuple[int, int] | None = None,
                 rules: tuple[str, ...] = ()):
        super().__init__(message)
        self.edge = edge
        self.rules = rules


class ResourceLimit(CdisError):
    """A brute-force routine was asked for a problem above its size guard."""

    exit_code = 5
