"""Exception hierarchy shared by all devstrip modules."""


class DevstripError(Exception):
    """Base class for errors raised by devstrip."""


class DomainError(DevstripError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class KnotMultiplicityError(DevstripError, ValueError):
    """A knot would exceed the multiplicity allowed for the degree."""


class MappingRangeError(DomainError):
    """A value lies outside the range of a mapping function."""


class DegenerateGeometryError(DevstripError, ArithmeticError):
    """A normal or tangent needed by the computation vanishes."""


class ConversionError(DevstripError):
    """The B-spline surface conversion cannot proceed.

    ``interval`` carries the offending parameter interval when known.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class FittingError(DevstripError, ArithmeticError):
    """Least-squares curve fitting is rank deficient."""


class OptimizationError(DevstripError, FloatingPointError):
    """The objective or its gradient produced non-finite values."""


class InputError(DomainError):
    """Malformed user input; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
