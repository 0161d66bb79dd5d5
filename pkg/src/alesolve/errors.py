"""Exception taxonomy shared by all modules."""


class ConfigurationError(ValueError):
    """Invalid build-time configuration (degrees, bounds, config files)."""


class UsageError(ValueError):
    """API misuse such as mismatched array lengths or invalid indices."""


class StateError(ValueError):
    """Physically inadmissible state (nonpositive density, pressure, height)."""


class GeometryError(RuntimeError):
    """Degenerate mesh geometry (nonpositive Jacobian, vanishing surface element)."""


class TimeStepError(RuntimeError):
    """Time integration failure, e.g. a Runge-Kutta stage Jacobian became nonpositive."""
