"""Exception types shared across the package."""


class SimplexFlowError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SimplexFlowError, ValueError):
    """Raised for non-finite, out-of-range, or malformed inputs."""


class SupportMismatchError(SimplexFlowError, ValueError):
    """Raised when KL(p||q) is requested with support(p) not contained in support(q)."""


class DegenerateFaceError(SimplexFlowError, ValueError):
    """Raised when a face restriction has no usable probability mass or too few tokens."""


class InteriorityError(SimplexFlowError, ValueError):
    """Raised when an operation requires a strictly interior simplex point."""


class UnsupportedIdentityError(SimplexFlowError, ValueError):
    """Raised when the time-reparameterization identity is requested for a field
    where temperature does not enter as a pure 1/T prefactor."""


class OracleFailureError(SimplexFlowError, RuntimeError):
    """Raised when an independent verification oracle fails its own contract.

    This aborts verification runs: a broken oracle certifies nothing.
    """


class ConfigError(SimplexFlowError, ValueError):
    """Raised for invalid experiment configurations (bad fields, missing files)."""
