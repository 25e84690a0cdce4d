"""Exception hierarchy.

Every error raised on a violated precondition derives from ``SemiSicError``,
which is itself a ``ValueError`` so callers validating input can catch either.
"""


class SemiSicError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidStateError(SemiSicError):
    pass


class InvalidEffectError(SemiSicError):
    pass


class DegenerateInputError(SemiSicError):
    pass


class WrongArityError(SemiSicError):
    pass


class OutOfRangeError(SemiSicError):
    """The semi-SIC parameter B lies outside (1/16, 1/12]."""


class InvalidPovmError(SemiSicError):
    pass


class MissingEntriesError(SemiSicError):
    pass


class InfeasibleThetaError(SemiSicError):
    """|(c2**2 - c1**2) / 4| > 1, so no angle realizes the stationary point."""


class ZeroLengthError(SemiSicError):
    pass


class OutsideDomainError(SemiSicError):
    pass


class NoZeroTermError(SemiSicError):
    pass


class CoplanarDirectionsError(SemiSicError):
    pass


class NegativeWeightError(SemiSicError):
    pass


class MissingFourthMeasurementError(SemiSicError):
    pass
