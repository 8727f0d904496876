"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SchloglError(Exception):
    """Base class for all library errors."""


class DomainError(SchloglError, ValueError):
    """An argument lies outside the domain of an operation."""


class SolverError(SchloglError, RuntimeError):
    """A numerical routine failed to produce a trustworthy answer.

    ``residual`` carries the offending residual norm when one is available.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class AmbiguityError(SolverError):
    """The requested object is not unique (e.g. a degenerate null space)."""


class EstimationError(SolverError):
    """Phase estimation found no usable peak; ``histogram`` is attached."""

    def __init__(self, message: str, histogram: dict | None = None):
        super().__init__(message)
        self.histogram = histogram or {}


class NullSpaceNotFound(SolverError):
    """The variational SVD did not reach a (near) zero singular value."""
