"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad bounds, resolutions, shapes, or schema."""


class NonConvergenceError(RuntimeError):
    """Newton iteration failed to reach tolerance.

    Attributes:
        residual_history: 2-norms of the residual at each Newton iterate.
        step_index: time-step index at which the failure occurred (set by
            the time loop; -1 for a standalone step).
    """

    def __init__(self, message, residual_history=None, step_index=-1):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
        self.step_index = step_index


class DivergenceError(RuntimeError):
    """Non-finite values encountered during integration or training.

    Attributes:
        index: step or epoch index at which the blow-up was detected.
    """

    def __init__(self, message, index=-1):
        super().__init__(message)
        self.index = index


class ExhaustedSpaceError(RuntimeError):
    """No unsampled candidates remain in the discrete parameter space."""
