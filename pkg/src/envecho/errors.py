"""Exception types raised by the library and mapped to CLI exit codes."""


class DimensionError(ValueError):
    """Shapes disagree, or a Hilbert space exceeds the configured cap."""


class NotHermitianError(ValueError):
    pass


class TruncationError(ValueError):
    """A truncated Fock basis loses more norm than the allowed deficit."""


class IntegratorAccuracyError(RuntimeError):
    """A fixed-step integrator drifted beyond its accuracy budget."""


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    """A numerical identity failed its tolerance tier."""
