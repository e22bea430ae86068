"""Exception hierarchy shared by the library and the CLI."""


class DissimSelectError(Exception):
    """Base class for all package errors."""


class ConfigError(DissimSelectError, ValueError):
    """Invalid configuration (CLI exit code 2)."""


class DataError(DissimSelectError, ValueError):
    """Input data is missing, malformed or insufficient (CLI exit code 3)."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    pass


class DimensionError(DissimSelectError, ValueError):
    pass


class MetricError(DissimSelectError, ValueError):
    pass


class DegenerateMaskError(DissimSelectError, ValueError):
    """Raised when a classifier is asked to train on zero selected features."""
