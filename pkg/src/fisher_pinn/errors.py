"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A configuration value is invalid (bad activation id, degenerate range, ...)."""


class UsageError(ValueError):
    """An API was called with inconsistent arguments (empty batch, rho mismatch, ...)."""
