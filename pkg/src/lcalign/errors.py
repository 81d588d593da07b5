"""Exception types shared across the package.

The CLI maps these onto machine-readable error categories, so new error
conditions should subclass one of the categories below rather than raising
bare ValueError.
"""


class CalibrationError(Exception):
    """Base class for all toolkit errors."""

    category = "error"


class BadInputError(CalibrationError):
    """Unusable input: missing file, malformed record, invalid config value."""

    category = "bad-input"


class DimensionMismatchError(CalibrationError):
    """Frame inputs disagree on image dimensions."""

    category = "dimension-mismatch"


class DegenerateSceneError(CalibrationError):
    """Scene or spec carries no usable signal (no primitives, empty frame)."""

    category = "degenerate-scene"
