"""Exception types raised by ceprecode."""


class DimensionError(ValueError):
    """Array shapes or problem sizes are inconsistent."""


class RankDeficiencyError(ValueError):
    """The channel Gram matrix is numerically singular."""


class BracketError(RuntimeError):
    """A root or maximum search was not bracketed by the given interval."""

    def __init__(self, message, lo=None, hi=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


class SpecValidationError(ValueError):
    """An experiment specification is missing or has invalid parameters."""
