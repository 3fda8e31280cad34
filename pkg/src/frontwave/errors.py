"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class FrontwaveError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ModelError(FrontwaveError):
    """Malformed model input or violated standing assumption."""

    exit_code = 2


class RefusalError(FrontwaveError):
    """A quantity whose prerequisite does not exist was requested.

    Examples are the slope at 1 when q has no derivative there, or the
    candidate slopes at 0 when q/phi oscillates.
    """

    exit_code = 3


class BelowAdmissibleRange(RefusalError):
    """The speed is too small for the requested quantity to be real."""


class ConvergenceError(FrontwaveError):
    """A bisection or integration failed to produce a trustworthy value."""

    exit_code = 4


class BracketError(ConvergenceError):
    """The critical-speed indicator is not monotone over the initial bracket."""
