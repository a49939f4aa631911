"""Exception hierarchy shared by all tspan modules."""

from __future__ import annotations


class TspanError(Exception):
    """Base class for every error raised by tspan."""


class InputError(TspanError, ValueError):
    """Malformed or inconsistent input (labels, tables, files)."""


class DimensionMismatch(InputError):
    pass


class UnknownLabel(InputError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else "unknown label"


class InfeasibleError(TspanError):
    """The feasible region of an LP is empty."""


class UnboundedError(TspanError):
    """Some objective (or coordinate) has no finite minimum."""


class ResourceLimitError(TspanError):
    """A configurable work cap (rays, iterations, ground-set size) was hit."""


class PreconditionError(TspanError):
    """An operation's documented precondition does not hold.

    ``certificate`` carries a machine-checkable witness when one is available.
    """

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NonUniqueError(PreconditionError):
    """A point that should be unique was not; the extended four-point condition fails."""


class NotInSetError(PreconditionError):
    """A function is not in the required set (P_d, T_d, M(d), T_delta, ...)."""


class VerificationError(TspanError):
    """A self-check of a constructed object failed. Always a bug."""
