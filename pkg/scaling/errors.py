"""
Exception hierarchy shared by every module in the project.
"""

from typing import Optional


class ScalingError(ValueError):
    """Base class for all domain, fitting, parsing and training failures"""


class DomainError(ScalingError):
    """Argument outside the domain of an operation or type invariant"""


class InsufficientDataError(ScalingError):
    """Too few (or too degenerate) observations to fit a law"""


class FitFailureError(ScalingError):
    """No feasible coefficients could be found"""


class DegenerateRangeError(ScalingError):
    """A coordinate has zero range where a normalization needs one"""


class InfeasibleBudgetError(ScalingError):
    """Budget does not cover the minimum model and data sizes"""


class SchemaError(ScalingError):
    """A persisted law document does not match the expected schema"""


class TrainingDivergedError(ScalingError):
    """Training loss became non-finite"""

    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"training diverged at step {step} (loss={loss})")


class ParseError(ScalingError):
    """Malformed experiment-record input"""

    def __init__(self, message: str, line: int, column: Optional[str] = None):
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column '{column}'"
        super().__init__(f"{where}: {message}")
