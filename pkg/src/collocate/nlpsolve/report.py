"""Solver results and iteration logs."""

import csv
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

Array = np.ndarray


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    LINE_SEARCH_FAILURE = "line_search_failure"


@dataclass
class IterationRecord:
    """One row of the iteration log."""

    iter: int
    mu: float
    merit: float
    kkt_residual: float
    step_length: float


ITERATION_LOG_HEADER = ("iter", "mu", "merit", "kkt_residual", "step_length")


@dataclass
class SolveReport:
    """Result of an interior-point solve.

    Attributes:
        status: optimal, max_iter or line_search_failure
        objective: Objective value at the returned point
        iterations: Outer iterations performed
        stationarity: ‖∇f − Jᵀy‖∞ at the returned point
        primal_feasibility: max(‖c_E‖∞, ‖max(0, −c_I)‖∞)
        complementarity: ‖S·z‖∞
        mean_iteration_time: Mean time per iteration of one KKT factorization and
            solve plus one derivative evaluation, in seconds
        mean_wall_time: Mean wall time per iteration including line-search trials
        solution: Final primal point
        multipliers_eq: Equality multipliers
        multipliers_ineq: Inequality multipliers
        message: Diagnostic text for non-optimal exits
        history: Iteration log

    Examples:
        >>> report.status
        <SolveStatus.OPTIMAL: 'optimal'>
        >>> if report:
        ...     print(report.objective)
    """

    status: SolveStatus
    objective: float
    iterations: int
    stationarity: float
    primal_feasibility: float
    complementarity: float
    mean_iteration_time: float
    solution: Array = field(repr=False)
    multipliers_eq: Array = field(default=None, repr=False)
    multipliers_ineq: Array = field(default=None, repr=False)
    message: Optional[str] = None
    history: List[IterationRecord] = field(default_factory=list, repr=False)
    mean_wall_time: float = 0.0

    @property
    def ms_per_iter(self) -> float:
        return 1e3 * self.mean_iteration_time

    @property
    def kkt_residual(self) -> float:
        return max(self.stationarity, self.primal_feasibility, self.complementarity)

    def to_wire(self, include_solution: bool = False) -> Dict[str, Any]:
        """Serialize for JSON output."""
        d: Dict[str, Any] = {
            "status": self.status.value,
            "objective": self.objective,
            "iterations": self.iterations,
            "stationarity": self.stationarity,
            "primal_feasibility": self.primal_feasibility,
            "complementarity": self.complementarity,
            "ms_per_iter": self.ms_per_iter,
            "wall_ms_per_iter": 1e3 * self.mean_wall_time,
        }
        if self.message:
            d["message"] = self.message
        if include_solution:
            d["solution"] = [float(v) for v in self.solution]
        return d

    def __bool__(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


def write_iteration_log(path: Union[str, Path], records: Sequence[IterationRecord]) -> None:
    """Write the iteration log as CSV (header iter,mu,merit,kkt_residual,step_length)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ITERATION_LOG_HEADER, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow(asdict(record))


def objective_error(v: float, v_ref: float) -> float:
    """Signed objective error v − v_ref."""
    return float(v) - float(v_ref)
