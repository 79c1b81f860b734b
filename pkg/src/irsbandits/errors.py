"""Exception types shared across modules."""


class CapabilityError(RuntimeError):
    """A request the library cannot serve at this size (lattice cap, oracle limits)."""


class ConfigError(ValueError):
    """An invalid experiment configuration."""
