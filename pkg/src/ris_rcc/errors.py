"""Exception types raised by the solver stack."""


class DomainError(ValueError):
    """An argument lies outside the domain of a model function."""


class InfeasibleBlockError(RuntimeError):
    """A BCD block subproblem has an empty feasible set."""


class NumericalError(RuntimeError):
    """An iterative routine failed to bracket or converge within its cap."""


class InfeasibleScenarioError(RuntimeError):
    """No feasible starting point could be constructed for a solve."""


class InfeasibleBudgetError(ValueError):
    """The power budget cannot cover the fixed per-element overheads."""


class UsageError(ValueError):
    """Bad experiment specification or command-line usage."""
