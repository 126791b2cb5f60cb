"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An input is outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """A parameter set or run configuration violates an invariant."""


class DivergedReferenceError(RuntimeError):
    """Integrating the reference dynamics produced non-finite values."""

    def __init__(self, message: str, interval: int | None = None):
        self.interval = interval
        if interval is not None:
            message = f"interval {interval}: {message}"
        super().__init__(message)


class SolverNumericalError(RuntimeError):
    """The iterative solver produced non-finite iterates."""

    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
