"""Exception types shared across the package, plus CLI exit-code constants.

The command line maps outcomes to exit codes: 0 for a completed run, 1 for
usage or input errors, 2 when a declared hypothesis fails its mechanical
precheck, 3 when a search or experiment could not finish within its caps.
"""

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HYPOTHESIS_VIOLATION = 2
EXIT_INCONCLUSIVE = 3


class LaminaError(Exception):
    """Base class for every error raised deliberately by this package."""


class MalformedInputError(LaminaError, ValueError):
    """A word, table, file, or graph failed validation."""


class RankMismatchError(MalformedInputError):
    """Two objects disagree about the rank of the ambient free group."""


class UncertifiedInverseError(LaminaError):
    """An operation required a certified inverse table and the check failed."""


class LengthCapExceededError(LaminaError):
    """An iterate grew past the configured letter cap."""

    def __init__(self, message, attained=None, cap=None):
        super().__init__(message)
        self.attained = attained
        self.cap = cap


class NotTrainTrackError(LaminaError):
    """Cancellation appeared while iterating edge images."""

    def __init__(self, message, edge=None, power=None):
        super().__init__(message)
        self.edge = edge
        self.power = power


class NotPrimitiveError(LaminaError):
    """No power of the matrix within the Wielandt bound is strictly positive."""


class HypothesisViolationError(LaminaError):
    """A declared experiment hypothesis failed a mechanical precheck."""


class DegenerateRayError(LaminaError):
    """An eigenray stabilized before reaching the requested prefix length."""

    def __init__(self, message, path=()):
        super().__init__(message)
        self.path = tuple(path)


class ResourceCapError(LaminaError):
    """A breadth-first search hit its state cap before finishing.

    Carries whatever was completed so callers can report partial results
    honestly instead of guessing.
    """

    def __init__(self, message, attained_radius=None, partial=None):
        super().__init__(message)
        self.attained_radius = attained_radius
        self.partial = partial
