"""Exception hierarchy shared by all madd modules.

Each class maps to a CLI exit code (see madd.cli): structural problems with
the process description are SpecError (2), violated operation preconditions
are PreconditionError (3), solver/accuracy failures are NumericError (4) and
exhausted resource caps are ResourceError (5).
"""


class MaddError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class SpecError(MaddError):
    """Malformed process description (bad schema, row mass not 1, ...)."""

    exit_code = 2


class PreconditionError(MaddError):
    """An operation was called on input that violates its contract."""

    exit_code = 3


class NumericError(MaddError):
    """A numerical procedure failed to reach its accuracy target."""

    exit_code = 4


class DecompositionUnavailableError(NumericError):
    """Leading eigenvalue too close to the rest of the spectrum."""


class ResourceError(MaddError):
    """A configured cap (convolution horizon, grid size) was exceeded."""

    exit_code = 5
