"""Exception hierarchy shared across the package."""


class FmciError(Exception):
    """Base class for all package errors."""


class DomainError(FmciError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(FmciError, RuntimeError):
    """Iterative solver failed; ``best`` carries the best iterate seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(FmciError, ValueError):
    """Invalid sketch parameters."""


class MergeError(FmciError, ValueError):
    """Sketches with different parameters or hash schemes cannot be merged."""


class FormatError(FmciError, ValueError):
    """Malformed serialized sketch."""


class CapacityError(FmciError):
    """No terminating 1-bit found within the hash stream capacity."""
