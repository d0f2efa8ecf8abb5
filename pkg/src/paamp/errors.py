"""Exception hierarchy shared across the planner modules."""


class PlannerError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PlannerError):
    """Caller violated an operation precondition (dimension mismatch, bad argument)."""


class InfeasibleGeometryError(PlannerError):
    """A polytope is empty or unbounded where a nonempty bounded one is required."""


class ScenarioFormatError(PlannerError):
    """Scenario file could not be parsed."""


class ScenarioValidationError(PlannerError):
    """Scenario parsed but violates a model invariant."""


class SequenceTooLongError(PlannerError):
    """A region path has more entries than available trajectory segments."""


class NumericFailureError(PlannerError):
    """LP solver exceeded its pivot budget or hit a numerical breakdown."""


class OracleScaleError(PlannerError):
    """Brute-force oracle refused an instance above its enumeration limit."""


class InternalConsistencyError(PlannerError):
    """A solver assignment or decoded result contradicts the model it came from."""
