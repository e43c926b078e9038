"""Exception hierarchy shared by all mcflow modules."""


class McflowError(Exception):
    """Base class for every error raised by this package."""


class NonManifold(McflowError):
    """Connectivity is not a single closed oriented manifold."""


class Degenerate(McflowError):
    """A zero-length edge, zero-area face, or underflowing dual weight."""


class FieldMismatch(McflowError):
    """Scalar field does not match the surface it is used with."""


class SolveFailure(McflowError):
    """Linear system of an implicit step missed its residual target."""


class InsufficientData(McflowError):
    """Not enough trajectory samples for the requested fit."""


class TrajectoryTooShort(McflowError):
    """Trajectory does not cover the requested time window."""


class TrajectoryRange(McflowError):
    """Trajectory does not span the time range an operation requires."""


class ShapeMismatch(McflowError):
    """Surface is not the shape a closed-form comparison expects."""


class ZeroDenominator(McflowError):
    """A ratio whose denominator vanished identically."""


class UnsupportedDimension(McflowError):
    """Operation is undefined for this hypersurface dimension."""


class ExponentOrder(McflowError):
    """Interpolation exponents are not ordered t < r < s."""


class SubcriticalExponent(McflowError):
    """Integrability exponent q <= (n+2)/2 leaves the bootstrap undefined."""


class BelowThreshold(McflowError):
    """Normalization requested but the integral is below the threshold."""


class DomainError(McflowError):
    """Argument outside the mathematical domain of the function."""


class MissingMonitors(McflowError):
    """Trajectory carries no monitor series to post-process."""


class EmptyRegion(McflowError):
    """No vertex-time sample falls inside the requested spacetime region."""


class OutOfRange(McflowError):
    """Time argument at or beyond the closed-form singular time."""


class LockHeld(McflowError):
    """Output directory is owned by another invocation."""
