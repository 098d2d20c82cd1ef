"""Exception types shared across the package."""


class SdmemError(Exception):
    """Base class for all package errors."""


class DomainError(SdmemError):
    """A mathematical operation left its domain (log of a non-positive
    number, state outside the model's state space, singular covariance).

    The inner optimizer treats this as "objective undefined here" and
    retreats; it is never silently converted to NaN.
    """


class ConstraintError(SdmemError):
    """A (theta, b) combination violates the model's admissibility
    constraint, e.g. the square-root process positivity condition."""


class ConfigError(SdmemError):
    """Invalid user-supplied configuration (bad parameter value, malformed
    file, inconsistent design)."""


class SimulationError(SdmemError):
    """Path simulation could not produce an admissible trajectory."""
