"""Exception and warning types raised across the package."""


class MetrologyError(Exception):
    """Base class for all package errors."""


class OutOfRangeError(MetrologyError, ValueError):
    pass


class DomainError(MetrologyError, ValueError):
    pass


class UndefinedPrecisionError(DomainError):
    """Precision is undefined (zero slope, P in {0, 1}, or a phase-insensitive state)."""


class IntegratorError(MetrologyError, RuntimeError):
    pass


class FitError(MetrologyError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegenerateError(MetrologyError, RuntimeError):
    pass


class TruncationWarning(UserWarning):
    """The Fock truncation is too small for the requested displacement."""
