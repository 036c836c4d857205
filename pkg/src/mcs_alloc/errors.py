"""
Error hierarchy for mcs-alloc.

Every error carries the CLI exit code it maps to:
- 3: input, configuration or mode problems
- 4: infeasible problems
- 5: internal size / enumeration limits
"""


class AllocationError(Exception):
    """Base class for all mcs-alloc errors"""
    exit_code: int = 1


class ParameterError(AllocationError, ValueError):
    """Invalid argument value (k < q, negative weights, ...)"""
    exit_code = 3


class ModeMismatchError(ParameterError):
    """Coordinate modes or problem modes do not match"""


class ConfigError(ParameterError):
    """Invalid scenario configuration"""


class InstanceParseError(ParameterError):
    """Malformed instance file"""


class VersionError(InstanceParseError):
    """Unsupported instance file format version"""


class InfeasibleError(AllocationError):
    """No allocation satisfies the constraints"""
    exit_code = 4


class InfeasibleBudgetError(InfeasibleError):
    """Incentive budget lies below the minimum attainable incentive"""

    def __init__(self, budget: float, c_min: float):
        self.budget = budget
        self.c_min = c_min
        super().__init__(f"budget {budget:g} is below the minimum total incentive c_min={c_min:g}")

    def __reduce__(self):
        return (InfeasibleBudgetError, (self.budget, self.c_min))


class NoCandidatesError(AllocationError):
    """Task-set family holds no candidate sets"""
    exit_code = 4


class SizeLimitError(AllocationError):
    """Problem exceeds an admission limit"""
    exit_code = 5


class EnumerationBudgetError(SizeLimitError):
    """Full task-set enumeration would exceed the route budget"""

    def __init__(self, routes: int, budget: int):
        self.routes = routes
        self.budget = budget
        super().__init__(
            f"enumeration needs {routes} routes, budget is {budget}; "
            f"use the pruned enumeration (mtp-mcmf with --k) instead"
        )

    def __reduce__(self):
        return (EnumerationBudgetError, (self.routes, self.budget))


class SweepError(AllocationError):
    """A sweep grid point failed; carries the exit code of the underlying error"""

    def __init__(self, message: str, exit_code: int = 1):
        super().__init__(message)
        self.exit_code = exit_code

    def __reduce__(self):
        return (SweepError, (str(self), self.exit_code))
