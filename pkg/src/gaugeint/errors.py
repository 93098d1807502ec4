"""Exception types shared across the toolkit."""

from __future__ import annotations


class GaugeIntError(Exception):
    """Base class for all toolkit errors."""


class EvaluationError(GaugeIntError):
    """A function produced a non-finite value off the exceptional set."""

    def __init__(self, message: str, points=()):
        super().__init__(message)
        self.points = tuple(points)


class BuildError(GaugeIntError):
    """Base class for partition-construction failures."""


class AnchorOverlapError(BuildError):
    """Anchor intervals around exceptional points overlap or leave the span."""


class StraddleFailure(BuildError):
    """The width search bottomed out without satisfying the straddle check.

    Signals that the declared derivative does not match the function near
    ``tag``, or that ``tag`` sits next to an undeclared singularity.
    """

    def __init__(self, tag: float, width: float, error: float, detail: str = ""):
        self.tag = tag
        self.width = width
        self.error = error
        msg = (
            f"straddle check failed at tag {tag!r} "
            f"(last width {width:.3e}, error {error:.3e})"
        )
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class BudgetExceeded(BuildError):
    """A construction limit (pair count, recursion depth) was hit."""

    def __init__(self, detail: str, pairs_built: int = 0, position: float | None = None):
        self.pairs_built = pairs_built
        self.position = position
        super().__init__(detail)


class NotLocallyConstant(GaugeIntError):
    """The derivative is not identically zero off the exceptional set."""

    def __init__(self, points):
        self.points = tuple(points)
        shown = ", ".join(f"{p:.6g}" for p in self.points[:4])
        super().__init__(
            f"derivative is nonzero off the exceptional set (e.g. at {shown})"
        )
