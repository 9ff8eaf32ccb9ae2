"""Exception hierarchy shared by all modules."""


class SpecgapError(Exception):
    """Base class for every error raised by specgap."""


class GraphError(SpecgapError, ValueError):
    """Invalid graph, malformed graph text, or an out-of-range graph operation."""


class DisconnectedError(GraphError):
    """A connected graph was required."""


class DisconnectedPrefixError(DisconnectedError):
    def __init__(self, k: int):
        super().__init__(f"induced prefix on the first {k} vertices is disconnected")
        self.k = k


class BudgetExceeded(SpecgapError):
    """A state space is larger than the configured budget."""

    def __init__(self, what: str, size: int, budget: int, budget_name: str = "state_budget"):
        super().__init__(f"{what} has {size} states, exceeding {budget_name}={budget}")
        self.size = size
        self.budget = budget
        self.budget_name = budget_name


class ConvergenceError(SpecgapError):
    """An iterative eigensolver did not reach its residual tolerance."""


class ReducibleChainError(SpecgapError):
    """The generator has more than one zero eigenvalue."""


class LumpabilityError(SpecgapError):
    """A lumping map fails the lumpability condition or yields an asymmetric quotient."""

    def __init__(self, message: str, witness: tuple | None = None):
        super().__init__(message)
        self.witness = witness
