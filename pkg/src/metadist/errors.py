"""Exception types raised by metadist."""


class MetadistError(Exception):
    """Base class for all library errors."""


class PrecisionError(MetadistError):
    """Mixture weights fell below the negativity tolerance.

    Either the working precision is too small for the transform order or the
    moment sequence is not a valid [0, 1] moment sequence.
    """

    def __init__(self, message, index=None, value=None, digits=None, suggested_digits=None):
        super().__init__(message)
        self.index = index
        self.value = value
        self.digits = digits
        self.suggested_digits = suggested_digits


class ConvergenceError(MetadistError):
    """A series evaluation hit its term cap before reaching the tolerance."""

    def __init__(self, message, terms=None):
        super().__init__(message)
        self.terms = terms


class DegenerateDistributionError(MetadistError, ValueError):
    """The moment sequence belongs to (or is numerically close to) a point mass."""


class MomentFileError(MetadistError, ValueError):
    """A moment file could not be parsed or violates moment-sequence rules."""

    def __init__(self, message, line=None, index=None):
        super().__init__(message)
        self.line = line
        self.index = index
