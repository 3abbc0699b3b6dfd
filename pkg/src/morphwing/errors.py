"""Exception types raised across the package."""


class MorphwingError(Exception):
    """Base class; the CLI maps every subclass to exit status 1."""


class NoConvergence(MorphwingError):
    pass


class NonPhysical(MorphwingError):
    pass


class OutOfRange(MorphwingError, ValueError):
    pass


class BranchAmbiguity(MorphwingError):
    pass


class TooFewTriggers(MorphwingError, ValueError):
    pass


class RankDeficient(MorphwingError, ValueError):
    pass


class NoThrustZero(MorphwingError):
    pass


class NoTrim(MorphwingError):
    pass


class InvalidCutoff(MorphwingError, ValueError):
    pass


class TooFewMarkers(MorphwingError, ValueError):
    pass


class TooFewTrials(MorphwingError, ValueError):
    pass
