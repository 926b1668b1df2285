"""Exception hierarchy shared by every module."""


class NewtonAtlasError(Exception):
    """Base class for all domain errors raised by the package."""


class DivisionByZeroPolynomial(NewtonAtlasError, ZeroDivisionError):
    pass


class ZeroPolynomial(NewtonAtlasError, ValueError):
    pass


class RootFindingError(NewtonAtlasError, ArithmeticError):
    pass


class DegenerateMap(NewtonAtlasError, ValueError):
    """The rational map has degree < 1 (constant), or is the identity where that is illegal."""


class ValidationFailed(NewtonAtlasError):
    def __init__(self, message, location=None, multiplier=None, expected=None):
        super().__init__(message)
        self.location = location
        self.multiplier = multiplier
        self.expected = expected


class NotParabolic(NewtonAtlasError):
    pass


class RootOutsideRegion(NewtonAtlasError):
    pass


class CriticalPointUnresolved(NewtonAtlasError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SeedNotInParabolicBasin(NewtonAtlasError):
    pass


class SegmentLeavesBasin(NewtonAtlasError):
    pass


class IOFailure(NewtonAtlasError, OSError):
    pass


class RasterFormatError(NewtonAtlasError, ValueError):
    pass
