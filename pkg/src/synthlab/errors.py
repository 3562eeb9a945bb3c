"""Exception types raised by the laboratory."""


class SynthlabError(Exception):
    """Base class for all errors raised by synthlab."""


class ArgumentError(SynthlabError, ValueError):
    """An argument is outside the documented range."""


class UnsupportedDimensionError(ArgumentError):
    pass


class NotThinError(ArgumentError):
    """The declared support dimension is not smaller than the ambient one."""


class DomainError(ArgumentError):
    pass


class ResolutionError(SynthlabError):
    """A quadrature or grid cannot resolve the requested band."""

    def __init__(self, message, required_order=None):
        super().__init__(message)
        self.required_order = required_order


class HypothesisViolationError(SynthlabError):
    """A hypothesis of a bound does not hold for the supplied data."""


class UndefinedRatioError(SynthlabError, ZeroDivisionError):
    pass
