"""Exception types shared across the package."""


class SketchIPMError(Exception):
    """Base class for all package errors."""


class BoundsError(SketchIPMError, IndexError):
    """A row index fell outside ``[0, n)``."""


class ShapeError(SketchIPMError, ValueError):
    """Input arrays have incompatible shapes."""


class DomainError(SketchIPMError, ValueError):
    """A scalar parameter is outside the admissible range."""


class RankDeficientError(SketchIPMError, ValueError):
    """A matrix that must have full column rank does not."""


class InfeasibleInterior(SketchIPMError, ValueError):
    """A point is not strictly inside ``{x : Ax > b}``.

    ``index`` names the first row whose slack is not positive.
    """

    def __init__(self, index, slack):
        self.index = int(index)
        self.slack = float(slack)
        super().__init__(f"slack of row {self.index} is {self.slack:.3e} <= 0")


class NonConvergence(SketchIPMError, RuntimeError):
    """An iteration cap was hit before the stopping rule fired."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class BoundViolation(SketchIPMError, ValueError):
    """A declared entrywise bound on a vector was violated at a sampled index."""

    def __init__(self, index, value, bound):
        self.index = int(index)
        self.value = float(value)
        self.bound = float(bound)
        super().__init__(f"|v[{self.index}]| = {abs(self.value):.3e} exceeds declared bound {self.bound:.3e}")
