"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: usage/parameter problems -> 1,
file I/O problems -> 2, evaluation problems -> 3.
"""


class MorphlocError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(MorphlocError, ValueError):
    """Array shapes or extents violate an operation's contract."""


class ParameterError(MorphlocError, ValueError):
    """A scalar parameter or configuration value is out of range."""


class DataIOError(MorphlocError, OSError):
    """A mask, score, config, or report file could not be read or written."""


class EvaluationError(MorphlocError, RuntimeError):
    """Metric evaluation is impossible on the given inputs."""
