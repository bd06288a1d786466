"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs (CLI exit status 2) and
``NumericError`` for budget, convergence and topology failures (exit status 3).
"""


class PlessnerLabError(Exception):
    pass


class ValidationError(PlessnerLabError, ValueError):
    pass


class NumericError(PlessnerLabError, RuntimeError):
    pass


class DomainExitError(ValidationError):
    """Query point outside the open disc / open halfplane."""


class PoleError(ValidationError):
    """Query point coincides with (or lands inside the exclusion disc of) a pole."""


class UnknownFunctionError(ValidationError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidParamsError(ValidationError):
    pass


class OutOfBandError(ValidationError):
    pass


class MismatchError(ValidationError):
    pass


class BudgetError(NumericError):
    pass


class NonConvergenceError(NumericError):
    pass


class CriticalProximityError(NumericError):
    pass


class ProjectionFailureError(NumericError):
    pass
