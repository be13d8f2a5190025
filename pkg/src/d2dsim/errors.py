"""Exception types raised across the package."""


class D2DSimError(Exception):
    """Base class for all package errors."""


class DomainError(D2DSimError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class TraceFormatError(D2DSimError):
    """The trace stream does not start with the canonical header."""


class TraceParseError(D2DSimError):
    """A data line of the trace could not be parsed."""

    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class DegenerateFit(D2DSimError):
    """Contact durations have zero variance, so no Gamma fit exists."""

    def __init__(self, mean):
        self.mean = mean
        super().__init__(f"zero-variance contact durations (mean={mean})")


class SequencingError(D2DSimError):
    """An IBP query was made for a user other than the next one."""


class ConfigError(D2DSimError):
    """Invalid simulation or CLI configuration."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class InvariantViolation(D2DSimError, RuntimeError):
    """Internal bookkeeping became inconsistent."""
