"""Collocate exceptions."""

from typing import Optional


class CollocateError(Exception):
    """Base exception for all collocate errors."""

    pass


class SchemeError(CollocateError, ValueError):
    """Unsupported collocation order or point family."""

    pass


class DimensionError(CollocateError, ValueError):
    """Inconsistent problem dimensions, grids or bounds."""

    pass


class StepFailure(CollocateError):
    """Newton iteration on the stage equations did not converge."""

    def __init__(self, message: str, residual: float = None, iterations: int = None, interval: Optional[int] = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.interval = interval

    def at_interval(self, interval: int) -> "StepFailure":
        """Return a copy tagged with the grid interval that failed."""
        return StepFailure(
            f"interval {interval}: {self}",
            residual=self.residual,
            iterations=self.iterations,
            interval=interval,
        )


class DerivativeMismatchError(CollocateError):
    """An analytic derivative disagrees with finite differences."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class EvaluationError(CollocateError):
    """A model callable produced non-finite output."""

    def __init__(self, message: str, block: str = None, interval: Optional[int] = None):
        super().__init__(message)
        self.block = block
        self.interval = interval


class FactorizationError(CollocateError, RuntimeError):
    """The KKT matrix could not be factorized or produced a non-finite solution."""

    pass
