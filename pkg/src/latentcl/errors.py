"""Exception types shared across the package."""


class LatentCLError(Exception):
    """Base class for all package-specific errors."""


class EmptyData(LatentCLError):
    pass


class NotSymmetric(LatentCLError):
    pass


class BadK(LatentCLError):
    pass


class SingularMatrix(LatentCLError):
    pass


class ZeroVariance(LatentCLError):
    pass


class BadMagic(LatentCLError):
    pass


class Truncated(LatentCLError):
    pass


class CorruptLabels(LatentCLError):
    pass


class LabelMismatch(LatentCLError):
    pass


class ShapeMismatch(LatentCLError):
    pass


class TooManyTasks(LatentCLError):
    pass


class DuplicateClass(LatentCLError):
    pass


class BadConfig(LatentCLError):
    pass


class UnknownKey(LatentCLError):
    pass


class NeedTwoTasks(LatentCLError):
    pass


class ZeroPrototype(LatentCLError):
    pass


class EmptyModel(LatentCLError):
    pass


class DivergedTraining(LatentCLError):
    pass


class RelativeForgettingUndefined(LatentCLError):
    pass
