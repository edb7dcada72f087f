"""Exception hierarchy shared across the pipeline.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, DivergenceError -> 4.
"""


class OpenIntentError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(OpenIntentError):
    """Invalid run configuration: missing files, bad modes, bad values."""


class DataError(OpenIntentError):
    """Malformed or inconsistent input data."""


class ConstraintError(DataError):
    """Inconsistent must-link / cannot-link constraint set."""


class DivergenceError(OpenIntentError):
    """Training produced a non-finite loss."""
