"""Exception and warning types raised across the package."""


class HypInverseError(Exception):
    """Base class for all package errors."""


class DegenerateBeta(HypInverseError, ValueError):
    """beta is (numerically) +1 or -1, so the basis is undefined."""


class InvalidNonlocalParams(HypInverseError, ValueError):
    """delta1/delta2 violate delta >= 0, 1 + d1*d2 > d1 + d2."""


class NonPositiveRho(HypInverseError, ArithmeticError):
    """A mode denominator rho_k(T) is not strictly positive."""


class HNearZero(HypInverseError, ValueError):
    """The observation h(t) comes too close to zero on [0, T]."""


class HIdenticallyZero(HypInverseError, ValueError):
    """A manufactured problem produced h == 0."""


class MissingDerivative(HypInverseError, ValueError):
    """A required derivative of the data cannot be obtained reliably."""


class BoundaryMismatch(HypInverseError, ValueError):
    """A function violates the boundary relations a check requires."""


class GridMismatch(HypInverseError, ValueError):
    """Two objects that must share a grid do not."""


class NonConvergence(HypInverseError, RuntimeError):
    """The fixed-point iteration hit ``max_iter`` without meeting ``tol``.

    The partial :class:`~hypinverse.inverse.SolveResult` is kept on
    ``self.result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(HypInverseError, ValueError):
    """A configuration document failed validation."""


class QuadratureResolution(UserWarning):
    """Spatial grid is coarse relative to the highest mode."""


class BallEscape(UserWarning):
    """An iterate left the ball of radius A(T) + 2."""


class ConditionWarning(UserWarning):
    """Solving was forced although the data fail a solvability condition."""
