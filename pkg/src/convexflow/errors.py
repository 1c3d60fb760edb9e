"""Exception types shared across the package."""


class ConvexFlowError(Exception):
    """Base class for errors raised by this package."""


class SchemaError(ConvexFlowError):
    """An instance or solution document violates the expected schema."""


class IsolatedNodeError(ConvexFlowError):
    """A node is touched by no edge where full coverage is required."""


class EdgeUtilityNotSupported(ConvexFlowError):
    """The solver was given an edge with a nonzero edge utility."""


class UnboundedProblemError(ConvexFlowError):
    """The primal objective is unbounded above (the dual is infeasible)."""


class InfeasibleProblemError(ConvexFlowError):
    """The primal is infeasible (the dual decreases without bound)."""


class EnumerationBudgetError(ConvexFlowError):
    """A brute-force enumeration would exceed its pattern budget."""
