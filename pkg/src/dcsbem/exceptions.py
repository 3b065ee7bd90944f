class ParameterError(ValueError):
    """Raised when a configuration or argument violates a precondition."""


class RecoveryError(RuntimeError):
    """Raised when a greedy solver cannot continue.

    Attributes
    ----------
    iteration : int
        Zero-based iteration at which the failure occurred.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
