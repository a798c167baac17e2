"""Exception and warning types raised across the package."""


class TruncationError(ValueError):
    """A coherent amplitude does not fit the photon-number cutoff.

    ``required_n_max`` carries the smallest cutoff that would satisfy the
    tolerance, when it is known.
    """

    def __init__(self, message, required_n_max=None):
        super().__init__(message)
        self.required_n_max = required_n_max


class DegenerateOutcomeError(ValueError):
    """A measurement outcome has (numerically) zero probability."""


class IntegrationError(RuntimeError):
    """Numerical integration drifted outside its tolerances."""


class CrosscheckError(RuntimeError):
    """Closed-form and oracle concurrence disagree for a pure state."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class RegimeWarning(UserWarning):
    """Parameters fall outside the approximation regime being checked."""
