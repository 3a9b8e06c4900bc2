"""
Custom application exceptions.

Centralised exception definitions for clean error handling
across all layers of the simulator.
"""


class RcdSimError(Exception):
    """Base exception for the simulator."""

    def __init__(self, message: str = "An unexpected error occurred"):
        self.message = message
        super().__init__(self.message)


class DomainError(RcdSimError):
    """Raised when a cost function is queried outside its domain (x < 0 or g < 0)."""

    def __init__(self, quantity: str, value: float):
        self.quantity = quantity
        self.value = value
        super().__init__(f"'{quantity}' must be nonnegative, got {value!r}")


class ClassParamsError(RcdSimError):
    """Raised when (alpha, beta) do not describe a valid function class."""

    def __init__(self, alpha: float, beta: float):
        self.alpha = alpha
        self.beta = beta
        super().__init__(
            f"Invalid function class: need 0 < alpha <= beta, got alpha={alpha!r}, beta={beta!r}"
        )


class InfeasibleStateError(RcdSimError):
    """Raised when an allocation leaves the feasible set S_n."""

    def __init__(self, reason: str, residual: float = 0.0):
        self.reason = reason
        self.residual = residual
        super().__init__(f"Infeasible allocation state: {reason}")


class AgentIndexError(RcdSimError):
    """Raised for an out-of-range agent index or a degenerate pair i == j."""

    def __init__(self, index: int, n: int, reason: str = "index out of range"):
        self.index = index
        self.n = n
        super().__init__(f"Invalid agent index {index} for n={n}: {reason}")


class BracketFailureError(RcdSimError):
    """
    The multiplier bracket [alpha, beta] does not straddle the budget.

    Only possible when some function violates its class certificates.
    """

    def __init__(self, low_sum: float, high_sum: float, budget: float):
        self.low_sum = low_sum
        self.high_sum = high_sum
        super().__init__(
            f"Bisection bracket failure: sum(x(alpha))={low_sum!r}, "
            f"sum(x(beta))={high_sum!r}, budget={budget!r}"
        )


class MismatchedFunctionsError(RcdSimError):
    """Raised when an optimum is paired with a state holding other functions."""

    def __init__(self, reason: str = "optimum was computed for different functions"):
        super().__init__(reason)


class OracleViolationError(RcdSimError):
    """Raised when the optimum value exceeds the estimate value (broken solver)."""

    def __init__(self, f_est: float, f_opt: float):
        self.f_est = f_est
        self.f_opt = f_opt
        super().__init__(
            f"Optimal value {f_opt!r} exceeds estimate value {f_est!r}; the optimum solver is broken"
        )


class HorizonError(RcdSimError):
    """Raised for an empty horizon (T < 1)."""

    def __init__(self, horizon: int):
        self.horizon = horizon
        super().__init__(f"Horizon must be at least 1, got {horizon}")


class BoundDomainError(RcdSimError):
    """Raised when a closed-form bound is evaluated outside its validity range."""

    def __init__(self, bound: str, reason: str):
        self.bound = bound
        self.reason = reason
        super().__init__(f"Cannot evaluate '{bound}': {reason}")


class ConfigError(RcdSimError):
    """Raised for any invalid or conflicting experiment configuration."""

    def __init__(self, field: str, reason: str = "invalid value"):
        self.field = field
        self.reason = reason
        super().__init__(f"Configuration error in '{field}': {reason}")


class NonFiniteInputError(RcdSimError):
    """Raised when a numeric routine receives NaN or infinite entries."""

    def __init__(self, quantity: str):
        self.quantity = quantity
        super().__init__(f"'{quantity}' must have finite entries")


class MissingRecordsError(RcdSimError):
    """Raised when a per-step dump is requested from a streaming-mode trajectory."""

    def __init__(self):
        super().__init__("Trajectory has no per-step records (run with record=True)")
