"""Exception hierarchy shared by all modules."""


class CoarseGrainError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(CoarseGrainError, ValueError):
    """Input violates a documented invariant (shape, Hermiticity, trace, ...)."""


class DimensionError(InvalidInputError):
    pass


class NotHermitianError(InvalidInputError):
    pass


class SingularMatrixError(InvalidInputError):
    """A density (or other positive matrix) is not invertible at the requested eps."""


class PreconditionError(CoarseGrainError):
    """An operation's mathematical precondition does not hold for the given input."""


class NumericalBreakdownError(CoarseGrainError):
    """Quantities that must agree by theory disagree beyond tolerance."""


class CriteriaDisagreementError(NumericalBreakdownError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class FactorizationError(NumericalBreakdownError):
    def __init__(self, message, block=None, residual=None):
        super().__init__(message)
        self.block = block
        self.residual = residual
