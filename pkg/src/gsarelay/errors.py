"""Exception hierarchy shared by every module of the package."""


class GsaError(Exception):
    """Base class for all errors raised by gsarelay."""


class InvalidInputError(GsaError, ValueError):
    """Malformed or inconsistent input (shapes, non-finite entries, bad D)."""


class SingularMatrixError(GsaError, ArithmeticError):
    """A matrix that must be inverted is singular or not square."""


class DegenerateChannelError(GsaError):
    """A channel realization (or derived matrix) lost rank.

    Happens with probability zero for Gaussian channels, but injected or
    structured channels can trigger it.
    """


class InfeasibleAntennasError(GsaError):
    """Not enough relay antennas to build the null-space blocks for a pair.

    Attributes
    ----------
    pair : tuple of int
        The 1-based (s, t) pair whose block could not be built.
    required : int
        Relay antennas needed for that pair.
    available : int
        Relay antennas actually present.
    """

    def __init__(self, message, pair=None, required=None, available=None):
        super().__init__(message)
        self.pair = pair
        self.required = required
        self.available = available


class NotRepresentableError(GsaError, ValueError):
    """The requested instance needs fractional streams per channel use."""


class InfeasibleRequestError(GsaError, ValueError):
    """A data-switch-matrix synthesis request cannot be realized."""
