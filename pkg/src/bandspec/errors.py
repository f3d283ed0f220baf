"""Exception types shared across the package."""


class BandspecError(Exception):
    """Base class for package errors."""


class ConfigError(BandspecError, ValueError):
    """Invalid parameters or configuration."""


class ConvergenceError(BandspecError, RuntimeError):
    """An iterative numerical method failed to reach its tolerance."""


class InvariantError(BandspecError, RuntimeError):
    """A mathematical invariant was violated during a computation."""
