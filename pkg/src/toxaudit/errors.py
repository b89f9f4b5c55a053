"""Exception types shared across the package.

The CLI maps every ToxauditError to a one-line machine-parsable message and a
nonzero exit code, so anything a user can trigger with bad files or bad
arguments should raise one of these rather than a bare exception.
"""


class ToxauditError(Exception):
    """Base class for errors raised by this package."""


class SchemaError(ToxauditError):
    """An input file is missing mandatory columns or has a wrong header."""


class CsvParseError(ToxauditError):
    """A CSV stream is structurally malformed (not just a dirty row)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(ToxauditError):
    """A config file contains unknown keys or unparsable values."""


class DataError(ToxauditError):
    """Data violates a corpus-level contract (duplicate ids, unknown identity, ...)."""


class UndefinedMetricError(ToxauditError):
    """A metric has no defined value for the given inputs (e.g. single-class AUC)."""


class TrainingDivergedError(ToxauditError):
    """Training produced a non-finite loss or gradient."""
