"""
Exceptions raised by partitiontools. Every class also derives from the builtin
that plain code would have raised, so ``except ValueError`` keeps working.
"""


class PartitionToolsError(Exception):
    exit_code = 1


class FormatError(PartitionToolsError, ValueError):
    """Malformed input file, unknown config key or missing referenced file"""
    exit_code = 2


class PreconditionError(PartitionToolsError, ValueError):
    """Input values violate a documented precondition or type invariant"""
    exit_code = 3


class EmptyInterfaceError(PreconditionError):
    """A diagnostic needs interface faces but the partition has none"""


class BudgetExceededError(PartitionToolsError):
    """Exhaustive enumeration would exceed the assignment budget"""
    exit_code = 4

    def __init__(self, assignments: int, budget: int):
        self.assignments = assignments
        self.budget = budget
        super().__init__(f"Enumeration needs {assignments} assignments, budget is {budget}")


class InvariantError(PartitionToolsError, RuntimeError):
    exit_code = 5


class ConvergenceError(PartitionToolsError, RuntimeError):
    """Iterative solver did not reach the requested tolerance"""
    exit_code = 5

    def __init__(self, message: str, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)
