class OpIdealError(Exception):
    """Base class for errors raised by this package."""


class InputError(OpIdealError, ValueError):
    """Malformed input: dimension mismatch, zero vector where forbidden, ..."""


class ParameterError(OpIdealError, ValueError):
    """Exponents or interpolation parameters outside the admitted range."""


class DegenerateFamilyError(InputError):
    """The right-hand side of a summing inequality vanishes (all-zero family)."""


class SearchError(OpIdealError, RuntimeError):
    """An objective returned a non-finite value during a search."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class EstimationError(OpIdealError, RuntimeError):
    """Every restart of an estimation degenerated."""
