"""Exception hierarchy shared by every module."""


class RobAggError(Exception):
    """Base class for all package errors."""


class ValidationError(RobAggError, ValueError):
    """An object failed one of its construction invariants.

    ``constraint`` names the violated invariant and ``residual`` is the
    amount by which it was missed, when that is meaningful.
    """

    def __init__(self, constraint, residual=None, detail=""):
        self.constraint = constraint
        self.residual = residual
        msg = constraint
        if residual is not None:
            msg += f" (residual {float(residual):.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InvalidMartingale(ValidationError):
    pass


class ZeroProbabilitySignal(RobAggError, ValueError):
    pass


class ZeroProbabilityProfile(RobAggError, ValueError):
    pass


class ContradictoryCertainty(RobAggError, ValueError):
    """Both a 0 forecast and a 1 forecast were supplied."""


class DegeneratePrior(RobAggError, ValueError):
    pass


class ArityMismatch(RobAggError, ValueError):
    pass


class UnsupportedForecastPair(RobAggError, ValueError):
    pass


class BoundaryInput(RobAggError, ValueError):
    pass


class OrderViolation(RobAggError, ValueError):
    pass


class NonAnonymousScheme(RobAggError, ValueError):
    pass


class DomainError(RobAggError, ValueError):
    pass


class IndexOutOfRange(RobAggError, IndexError):
    pass


class InternalConsistencyError(RobAggError, ArithmeticError):
    """Two routes to the same quantity disagreed beyond tolerance."""
