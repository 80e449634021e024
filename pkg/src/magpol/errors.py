"""Exception types shared across the package."""


class ConditioningError(ValueError):
    """Polynomial or linear problem is too ill-conditioned to solve reliably."""


class InternalConsistencyError(RuntimeError):
    """A reconstructed solution failed its own residual check.

    This signals an algebra or implementation bug, not a physics outcome.
    """


class DivergenceError(RuntimeError):
    """Integration left the trusted amplitude range.

    Attributes
    ----------
    step : int
        Index of the integration step at which the overflow was detected.
    """

    def __init__(self, message: str, step: int = -1):
        super().__init__(message)
        self.step = step


class FitError(RuntimeError):
    """A calibration fit could not be performed on the given data."""


class ConfigError(ValueError):
    """Invalid run configuration; message carries the path to the bad field."""
