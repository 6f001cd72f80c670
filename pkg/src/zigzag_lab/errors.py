"""Exception hierarchy shared by all zigzag_lab modules."""


class ZigZagError(Exception):
    """Base class for library errors."""


class DomainError(ZigZagError, ValueError):
    """An argument lies outside the domain of an operation."""


class EvaluationError(ZigZagError, ArithmeticError):
    """A user function returned a non-finite value.

    Attributes:
        where: the point (position, segment index, step index ...) at which
            evaluation failed.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class QuadratureError(ZigZagError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NormalizationError(QuadratureError):
    """exp(-U) could not be normalized (divergent or non-convergent integral)."""


class DivergenceError(ZigZagError, ArithmeticError):
    """A quantity that must be finite (sigma^2, N_S, ...) diverges."""


class NoSwitchError(ZigZagError, RuntimeError):
    """The switching intensity along the current ray has finite total mass."""


class BoundViolationError(ZigZagError, RuntimeError):
    """A thinning bound was exceeded by the true switching rate.

    Attributes:
        t, x, theta: time, position and direction of the offending proposal.
        ratio: lambda / Lambda at that proposal.
    """

    def __init__(self, t, x, theta, ratio):
        super().__init__(
            f"thinning bound violated at t={t!r}, x={x!r}, theta={theta}: "
            f"lambda/Lambda = {ratio!r}"
        )
        self.t = t
        self.x = x
        self.theta = theta
        self.ratio = ratio


class InsufficientDataError(ZigZagError, ValueError):
    """Too few renewal cycles / samples for an estimator."""


class ValidityError(DomainError):
    """Closed-form formula requested outside its validity range."""


class TuningError(ZigZagError, RuntimeError):
    """Step-size tuning could not bracket the requested acceptance rate."""


class CapabilityError(ZigZagError, TypeError):
    """The target lacks metadata required by the requested operation."""
