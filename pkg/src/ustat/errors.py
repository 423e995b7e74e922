"""Exception types raised by the library.

Every error derives from :class:`UStatError`, which is itself a
``ValueError`` so callers that only care about bad input can catch that.
"""


class UStatError(ValueError):
    """Base class for all library errors."""


class InsufficientSampleError(UStatError):
    pass


class SizeGuardError(UStatError):
    pass


class InvalidRangeError(UStatError):
    pass


class InvalidDeltaError(UStatError):
    pass


class InvalidThresholdError(UStatError):
    pass


class InvalidConstantsError(UStatError):
    pass


class MissingBoundError(UStatError):
    pass


class MissingVarianceError(UStatError):
    pass


class InvalidConfigError(UStatError):
    pass


class TooManyBlocksError(UStatError):
    pass


class InsufficientBlocksError(UStatError):
    pass


class BudgetExceededError(UStatError):
    pass


class MissingTruthError(UStatError):
    pass


class SupNormViolationError(UStatError):
    """A kernel produced a value whose magnitude exceeds its declared sup norm."""


class SampleParseError(UStatError):
    pass
