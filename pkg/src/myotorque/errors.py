"""Exception taxonomy shared by all modules.

Three branches matter for the CLI exit-code contract: usage problems
(exit 1, handled by argument parsing), :class:`DataError` (exit 2) and
:class:`NumericalError` (exit 3).
"""


class MyotorqueError(Exception):
    """Base class for all package errors."""


class DataError(MyotorqueError):
    """Malformed, missing, or inconsistent input data."""


class NumericalError(MyotorqueError):
    """A numerical procedure failed (conditioning, non-convergence)."""


# --- signal carriers ---------------------------------------------------


class DegenerateSeries(DataError):
    """A series is too short or empty for the requested operation."""


class TargetOutsideSupport(DataError):
    """A resampling target grid extends beyond the source time span."""


class ZeroVariance(DataError):
    """Normalization statistics requested for a constant sequence."""


# --- filters -----------------------------------------------------------


class InvalidCutoff(DataError):
    """Cutoff frequency is not inside (0, Nyquist)."""


class InvalidOrder(DataError):
    """Filter order must be a positive integer."""


class InvalidBand(DataError):
    """Band edges must satisfy 0 < low < high < Nyquist."""


class SeriesTooShort(DataError):
    """Series too short for zero-phase filtering edge padding."""


# --- preprocessing -----------------------------------------------------


class MissingChannel(DataError):
    """A recording lacks a channel required by the requested operation."""


class NoMotionDetected(DataError):
    """Segmentation found too few extrema to form a motion cycle."""


class AlignmentError(DataError):
    """Channel time spans do not overlap; no common grid exists."""


# --- regression --------------------------------------------------------


class DimensionMismatch(DataError):
    """Input dimensions are inconsistent."""


class NotPositiveDefinite(NumericalError):
    """Kernel matrix could not be factorized even with maximal jitter."""


# --- evaluation --------------------------------------------------------


class TooFewUnits(DataError):
    """Fewer cross-validation units than requested folds."""


class LengthMismatch(DataError):
    """Paired vectors have different lengths."""


class NonPositiveBaseline(DataError):
    """Relative improvement requires a strictly positive baseline metric."""


class DegenerateTarget(DataError):
    """Peak-relative error is undefined for an all-zero target."""


# --- generation & I/O --------------------------------------------------


class InvalidSpec(DataError):
    """A session specification or config file is malformed."""


class ModelFormatError(DataError):
    """A serialized model file has an unknown or mismatched format."""
