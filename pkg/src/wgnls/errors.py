"""Error types shared across the package."""


class WgnlsError(Exception):
    """Base class for all package errors."""


class ShapeError(WgnlsError):
    """Field values do not match the owning grid."""


class DomainError(WgnlsError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(WgnlsError):
    """An iterative solver failed to reach its tolerance.

    Carries the last residual so callers can report how close it got.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class IntegrationError(WgnlsError):
    """Time stepping produced a non-finite field."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class SnapshotFormatError(WgnlsError):
    """A snapshot file does not carry the expected header."""


class ConfigError(WgnlsError):
    """Configuration is invalid; carries every violation, not just the first."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)
