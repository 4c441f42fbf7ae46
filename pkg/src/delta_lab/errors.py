"""Exception types shared across the package.

The CLI maps each class to a distinct exit status, so callers should raise the
most specific one that applies.
"""


class DeltaLabError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(DeltaLabError, ValueError):
    """An argument lies outside an operation's precondition."""

    exit_code = 2


class ResourceGuardError(DeltaLabError):
    """A request exceeds a configured size limit (range, block, height)."""

    exit_code = 3


class ConsistencyError(DeltaLabError, ArithmeticError):
    """Two independent routes to the same quantity disagree."""

    exit_code = 4
