"""Exception hierarchy shared by every module."""


class FxgbError(Exception):
    """Base class for all library errors."""


class RangeExceeded(FxgbError, OverflowError):
    """A fixed-point result left the encodable range."""


class DivByZero(FxgbError, ZeroDivisionError):
    pass


class InvalidBounds(FxgbError, ValueError):
    pass


class ZeroInverse(FxgbError, ZeroDivisionError):
    pass


class OutOfGapRange(FxgbError, ValueError):
    """A field element lies outside the one-bit-gap encoding window."""


class BoundViolation(FxgbError, ValueError):
    """An intermediate exceeded a bound the proof system relies on."""


class DatasetError(FxgbError, ValueError):
    """Malformed dataset: bad labels, shapes, or unparsable cells."""


class FormatError(FxgbError, ValueError):
    """A serialized file could not be decoded."""
