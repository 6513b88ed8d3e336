"""Exception hierarchy.

Three families map onto the CLI exit codes: ``ImageError`` (bad inputs,
exit 2 when raised while loading), ``StandardizationError`` (exit 3) and
``RegistrationError`` (exit 4).
"""


class ElregError(Exception):
    pass


class ImageError(ElregError, ValueError):
    pass


class DimensionTooSmall(ImageError):
    pass


class DimensionMismatch(ImageError):
    pass


class ScaleMismatch(ImageError):
    pass


class TooManyLevels(ImageError):
    pass


class StandardizationError(ElregError, ValueError):
    pass


class ConstantImage(StandardizationError):
    pass


class DegenerateHistogram(StandardizationError):
    pass


class DegenerateRange(StandardizationError):
    pass


class EmptyTrainingSet(StandardizationError):
    pass


class UntrainedConfig(StandardizationError):
    pass


class InvalidLandmarks(StandardizationError):
    pass


class RegistrationError(ElregError, ArithmeticError):
    pass


class SingularTransform(RegistrationError):
    pass


class DomainTooSmall(RegistrationError):
    pass


class IllConditioned(RegistrationError):
    pass


class InvalidParams(ElregError, ValueError):
    pass
