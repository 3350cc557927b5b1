"""Exception types raised by the library."""


class SpinRSError(Exception):
    """Base class for all library errors."""


class DimensionError(SpinRSError, ValueError):
    """Operands have incompatible shapes."""


class InvariantError(SpinRSError, ValueError):
    """A zero-sum or unit-determinant invariant is violated beyond repair."""


class RangeError(SpinRSError, OverflowError):
    """Result is not representable in floating point."""


class SingularityError(SpinRSError):
    """A coth pole (wall) or a zero diagonal entry was hit.

    Attributes
    ----------
    root : tuple of int or None
        The offending root ``(i, j)`` when the wall is a root hyperplane.
    time : float or None
        Time of the event when raised from a solver.
    """

    def __init__(self, message, root=None, time=None):
        super().__init__(message)
        self.root = root
        self.time = time


class ContinuityError(SpinRSError):
    """A branch or eigenvalue assignment step is ambiguous; refine the grid."""


class BreakdownError(SpinRSError):
    """The flow cannot be continued (eigenvalue collision or wall hit).

    The partial result computed before the breakdown is attached as
    ``partial`` and the breakdown time as ``time``.
    """

    def __init__(self, message, time=None, partial=None, root=None):
        super().__init__(message)
        self.time = time
        self.partial = partial
        self.root = root


class ComposabilityError(SpinRSError, ValueError):
    """Groupoid elements are not composable (source != target)."""


class AccuracyError(SpinRSError):
    """A quadrature or step-size estimate exceeds the requested tolerance."""

    def __init__(self, message, suggested_refinement=None):
        super().__init__(message)
        self.suggested_refinement = suggested_refinement


class StepLimitError(SpinRSError):
    """The integrator exceeded its step budget."""
