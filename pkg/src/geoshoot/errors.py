"""Exception types shared across the package."""


class GeoshootError(Exception):
    """Base class for all geoshoot errors."""


class ConfigurationError(GeoshootError, ValueError):
    """A spec or config object carries invalid parameters."""


class DegenerateConfigurationError(GeoshootError, ValueError):
    """A point set is degenerate (coincident points, singular Gram matrix)."""


class DivergenceError(GeoshootError, RuntimeError):
    """A trajectory or iteration produced a non-finite state."""
