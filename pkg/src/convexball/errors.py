"""Exception hierarchy shared by all modules."""


class ConvexBallError(Exception):
    """Base class for package errors."""


class DomainError(ConvexBallError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedSpaceError(ConvexBallError, ValueError):
    """The normed space is outside the supported family."""


class EvaluationError(ConvexBallError):
    """A user map returned non-finite values."""


class DegenerateDomainError(DomainError):
    """The domain ball is too small to sample."""


class NumericalError(ConvexBallError):
    """An inner solver failed to reach its residual target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnboundedFiberError(ConvexBallError):
    """A fiber is unbounded and no bounding box was configured."""


class InfeasibleGraphError(ConvexBallError, ValueError):
    """A polyhedral graph has no points."""


class PreconditionError(ConvexBallError, ValueError):
    """A documented precondition of the operation does not hold."""


class InconclusiveError(ConvexBallError):
    """Sampling produced no usable evidence."""


class NoCertificateError(ConvexBallError):
    """The moduli do not satisfy the strict inequality needed for a certificate."""

    def __init__(self, reason, **details):
        super().__init__(reason)
        self.reason = reason
        self.details = details


class ScalarizationError(ConvexBallError):
    """No separating functional exists within tolerance."""

    def __init__(self, message, x=None, y=None):
        super().__init__(message)
        self.x = x
        self.y = y


class ScenarioError(ConvexBallError, ValueError):
    """A scenario file is malformed or inconsistent."""
