"""Exception types raised across the package."""


class StratError(ValueError):
    """Base class for all domain errors."""


class MassMismatchError(StratError):
    pass


class NotARefinementError(StratError):
    def __init__(self, message: str, coarse_index: int | None = None):
        super().__init__(message)
        self.coarse_index = coarse_index


class AllocationError(StratError):
    """A stratum mass is not a positive integer multiple of 1/n."""


class EmptyPieceError(StratError):
    pass


class DimensionError(StratError):
    pass


class RangeError(StratError):
    """A function used with censored observations is not known to lie in [0, 1]."""


class SupportSizeError(StratError):
    pass


class PreconditionError(StratError):
    pass


class GeneratorInfeasibleError(StratError):
    pass
