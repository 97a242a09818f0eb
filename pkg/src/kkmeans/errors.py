"""Exception types shared across the package."""


class KKMeansError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(KKMeansError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateBandwidthError(KKMeansError):
    """All points coincide, so the pairwise bandwidth heuristic collapses to zero."""


class DegenerateMatrixError(KKMeansError):
    """A matrix that must carry a positive spectrum has none within tolerance."""


class FormatError(KKMeansError):
    """A data file could not be read or parsed; the message carries file/line context."""
