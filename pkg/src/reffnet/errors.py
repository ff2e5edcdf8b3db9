"""Exception hierarchy.

Every error carries a short machine-readable ``code`` which the CLI maps to
an exit status.
"""


class ReffError(Exception):
    code = "ERROR"


class InstanceFormatError(ReffError):
    code = "PARSE_ERROR"


class InvalidInstanceError(ReffError):
    code = "INVALID_INSTANCE"


class InfeasibleError(ReffError):
    code = "INFEASIBLE"


class NoConvergenceError(ReffError):
    """Solver ran out of iterations; ``best`` holds the last accepted iterate."""

    code = "NO_CONVERGENCE"

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DisconnectedError(ReffError):
    code = "DISCONNECTED"


class UnsupportedFlowError(ReffError):
    code = "UNSUPPORTED_FLOW"


class NotAUnitFlowError(ReffError):
    code = "NOT_A_UNIT_FLOW"


class EmptyResultError(ReffError):
    code = "EMPTY_RESULT"


class NotUnitInstanceError(ReffError):
    """Raised where a result is only valid for unit costs and resistances."""

    code = "NOT_UNIT_INSTANCE"


class NotOptimalError(ReffError):
    code = "NOT_OPTIMAL"

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class BadCertificateError(ReffError):
    code = "BAD_CERTIFICATE"


class RegimeViolationError(ReffError):
    code = "REGIME_VIOLATION"


class RoundingFailedError(ReffError):
    code = "ROUNDING_FAILED"


class NotSeriesParallelError(ReffError):
    code = "NOT_SERIES_PARALLEL"


class UnitCostRequiredError(ReffError):
    code = "UNIT_COST_REQUIRED"


class InfeasibleBudgetError(InfeasibleError):
    code = "INFEASIBLE_BUDGET"


class TooLargeError(ReffError):
    code = "TOO_LARGE"
