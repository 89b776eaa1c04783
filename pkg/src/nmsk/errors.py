class NMSKError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(NMSKError, ValueError):
    """Invalid model or run parameter; ``field`` names the offending input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NotPositiveSemidefinite(NMSKError):
    """The effective interaction matrix is indefinite; no variational solution applies."""


class NonConvergence(NMSKError):
    """No solver start reached its tolerance; ``report`` holds the best attempt."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class DomainError(NMSKError, ValueError):
    """A quadrature argument left the nonnegative half-line."""
