"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI uses when it escapes.
"""


class DTCNNError(Exception):
    exit_code = 1


class ShapeError(DTCNNError, ValueError):
    """Tensor extents are invalid or incompatible for an operation."""
    exit_code = 4


class ConstraintError(DTCNNError, ValueError):
    """A configuration value violates a documented constraint."""
    exit_code = 2


class ConfigError(DTCNNError):
    exit_code = 2


class DataError(DTCNNError, OSError):
    """Missing, corrupt or inconsistent on-disk data."""
    exit_code = 3


class CheckpointError(DataError):
    pass


class NumericError(DTCNNError, ArithmeticError):
    """Training diverged (NaN or inf loss)."""
    exit_code = 4
