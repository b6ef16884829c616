"""Exception types shared across the package."""


class DmsError(Exception):
    """Base class for package-specific errors."""


class ConfigurationError(DmsError):
    """A configuration value is missing, malformed, or inconsistent."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class CapacityError(DmsError):
    """Instance exceeds an exact solver's configured bounds and no fallback is enabled."""


class InfeasibleDemandError(DmsError):
    """Guaranteed demand cannot be served even with the full time horizon."""
