"""Exception types shared across the package."""


class HierPropError(Exception):
    """Base class for all package errors."""


class InvalidInputError(HierPropError, ValueError):
    """Inputs violate an operation's preconditions."""


class CyclicHierarchyError(InvalidInputError):
    """The category graph contains a directed cycle.

    Attributes
    ----------
    cycle : list of str
        One offending cycle, first node repeated at the end.
    """

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("hierarchy contains a cycle: " + " -> ".join(map(str, self.cycle)))


class UndefinedMetricError(HierPropError, ValueError):
    """A metric is undefined for the given labels (e.g. no negatives)."""


class SizeError(HierPropError, ValueError):
    """A dense assembly would exceed the configured size guard."""


class ConvergenceError(HierPropError, RuntimeError):
    """An iterative solver hit its iteration cap.

    Attributes
    ----------
    residual : float
        Final relative residual (CG) or maximum elementwise change (sweeps).
    iterations : int
    """

    def __init__(self, message, residual, iterations):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(f"{message} (residual={self.residual:.3e}, iterations={self.iterations})")
