"""Exception hierarchy shared by all pipeline stages."""


class DisptransError(Exception):
    """Base class for every error raised by this package."""


class SizeError(DisptransError, ValueError):
    """Raster dimensions are missing or inconsistent."""


class EmptyInputError(DisptransError, ValueError):
    """An operation received no usable (valid) data."""


class UnderdeterminedError(DisptransError, ValueError):
    """Too few samples to determine a quadratic model."""


class DegenerateGeometryError(DisptransError, ValueError):
    """The least-squares system is singular, e.g. all samples share one row."""


class InsufficientDataError(DisptransError, ValueError):
    """A robust fit ran out of usable samples."""


class DegenerateHistogramError(DisptransError, ValueError):
    """A histogram has no spread (constant input) or no votes."""


class NonConvergenceError(DisptransError, RuntimeError):
    """An iterative refinement failed to settle within its budget."""


class RasterFormatError(DisptransError, OSError):
    """A raster file is unreadable, truncated or of an unsupported format."""
