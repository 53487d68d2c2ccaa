"""CSV row types written by the harness.

All files are comma-separated with a header row, '.' decimal separator and
LF line endings. Missing values are written as empty fields.
"""

import csv
import sys
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from ..integrator import ConvergenceRow

CONVERGENCE_HEADER = ("method", "family", "d", "N", "h", "error", "slope")
CRANE_HEADER = (
    "instance",
    "method",
    "d",
    "family",
    "objective",
    "error",
    "iterations",
    "ms_per_iter",
    "status",
    "failures",
)
BENCH_HEADER = ("label", "log10_abs_error", "ms_per_iter")

GEOMEAN = "geomean"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def convergence_row(row: ConvergenceRow) -> tuple:
    return (row.method.value, row.family, row.d, row.N, row.h, row.error, row.fitted_slope)


@dataclass
class CraneRecord:
    """One crane solve, or a per-configuration summary when instance == "geomean".

    Attributes:
        instance: Instance index, or "geomean" for summary rows
        method: sc or pc
        d: Collocation order
        family: gauss or radau
        objective: Optimal objective value (empty on summary rows)
        error: Signed objective error, or geometric mean of |error| on summary rows
        iterations: Solver iterations (mean on summary rows)
        ms_per_iter: Mean per-iteration cost (KKT factorization and solve plus one
            derivative evaluation) in milliseconds
        status: Solver status, or "summary"
        failures: Failed solves of the configuration (summary rows only)
    """

    instance: Union[int, str]
    method: str
    d: int
    family: str
    objective: Optional[float]
    error: Optional[float]
    iterations: Optional[float]
    ms_per_iter: Optional[float]
    status: str
    failures: Optional[int] = None

    @property
    def is_summary(self) -> bool:
        return self.instance == GEOMEAN


@dataclass
class BenchPoint:
    """Pareto scatter point: configuration label, log10 |error|, time per iteration."""

    label: str
    log10_abs_error: float
    ms_per_iter: float


def write_csv(path: Optional[Union[str, Path]], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write rows under a header to path, or to stdout when path is None."""
    fh = open(path, "w", newline="") if path is not None else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    finally:
        if path is not None:
            fh.close()


def write_records(path: Optional[Union[str, Path]], header: Sequence[str], records: Iterable) -> None:
    write_csv(path, header, (astuple(r) for r in records))


def read_csv(path: Union[str, Path]) -> list:
    """Read a harness CSV back as a list of dicts (values as strings)."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
