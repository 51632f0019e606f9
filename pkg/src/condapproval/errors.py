"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class DegenerateTruncation(DomainError):
    """The truncation interval carries (numerically) zero probability mass."""


class DirectionViolation(DomainError):
    """A one-sided combination was requested for a non-positive z-value."""


class NecessaryConditionViolated(DomainError):
    """The pre-market result is too weak for any post-market result to suffice."""


class NoTrialRequired(Exception):
    """The combination rule is already satisfied without a post-market trial.

    Raised by the sizing code, which refuses to size a trial from this state.
    """


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, *, estimate: float, error: float, intervals: int):
        super().__init__(f"{message} (estimate={estimate!r}, error={error:.3g}, intervals={intervals})")
        self.estimate = estimate
        self.error = error
        self.intervals = intervals
