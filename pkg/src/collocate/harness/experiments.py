"""Experiment harness: convergence, structure and crane benchmark commands."""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..basis import CollocationScheme, Family
from ..integrator import Method, convergence_study
from ..model import CraneParams, harmonic_ivp, harmonic_solution, make_crane_ocp
from ..nlpsolve import SolveReport, objective_error, solve, write_iteration_log
from ..transcribe import closed_form_counts_for, initial_guess, structure_counts, transcribe
from .base import CommandRegistry
from .config import Configuration, CraneInstance, ExperimentConfig, InstanceBox
from .records import (
    BENCH_HEADER,
    CONVERGENCE_HEADER,
    CRANE_HEADER,
    GEOMEAN,
    BenchPoint,
    CraneRecord,
    convergence_row,
    write_csv,
    write_records,
)
from .result import CommandResult

logger = logging.getLogger(__name__)

#: Floor applied to |error| before taking logarithms.
ERROR_CLIP = 1e-16

#: Allowed deviation of a fitted convergence slope from the expected order.
SLOPE_TOLERANCE = 0.3

DEFAULT_N_LIST = (10, 20, 40, 80, 160)


def sample_instances(seed: int, n: int, box: Optional[InstanceBox] = None) -> List[CraneInstance]:
    """Draw n crane instances uniformly from the box with a Philox generator.

    All r0 values are drawn first, then all θ0 values, so the first k
    instances do not depend on n.
    """
    box = box or InstanceBox()
    rng = np.random.Generator(np.random.Philox(seed))
    r0 = rng.uniform(box.r0[0], box.r0[1], size=n)
    theta0 = rng.uniform(box.theta0[0], box.theta0[1], size=n)
    return [CraneInstance(r0=float(a), theta0=float(b)) for a, b in zip(r0, theta0)]


def geometric_mean(errors: Sequence[float]) -> Optional[float]:
    if not len(errors):
        return None
    clipped = np.maximum(np.abs(np.asarray(errors, dtype=float)), ERROR_CLIP)
    return float(np.exp(np.mean(np.log(clipped))))


def solve_crane(instance: CraneInstance, configuration: Configuration, config: ExperimentConfig) -> SolveReport:
    """Transcribe and solve one crane instance from the default initial guess."""
    ocp = make_crane_ocp(instance.r0, instance.theta0, config.crane)
    nlp = transcribe(ocp, configuration.method, configuration.scheme)
    return solve(nlp, initial_guess(nlp), config.solver)


@dataclass
class CraneBatch:
    """Per-instance records, summaries and Pareto points of a crane batch."""

    records: List[CraneRecord] = field(default_factory=list)
    summaries: List[CraneRecord] = field(default_factory=list)
    points: List[BenchPoint] = field(default_factory=list)

    def summary_for(self, configuration: Configuration) -> CraneRecord:
        method, family, d = configuration.key
        for row in self.summaries:
            if (row.method, row.family, row.d) == (method, family, d):
                return row
        raise KeyError(configuration.label)


def _log_iterations(log_dir: Optional[Path], index: int, configuration: Configuration, report: SolveReport) -> None:
    if log_dir is not None:
        write_iteration_log(log_dir / f"{index:04d}_{configuration.label}.csv", report.history)


def run_crane_batch(config: ExperimentConfig, log_dir: Optional[Union[str, Path]] = None) -> CraneBatch:
    """Solve every instance with the reference and each configuration, serially.

    With log_dir, every solve leaves its iteration log there as
    <instance>_<label>.csv.
    """
    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
    instances = config.instances or sample_instances(config.seed, config.n_instances, config.box)
    batch = CraneBatch()
    per_config: Dict[Configuration, List[CraneRecord]] = {c: [] for c in config.configurations}

    for index, instance in enumerate(instances):
        reference = solve_crane(instance, config.reference, config)
        _log_iterations(log_dir, index, config.reference, reference)
        if not reference:
            logger.warning(f"Instance {index}: reference solve {reference.status.value}")
        for configuration in config.configurations:
            report = solve_crane(instance, configuration, config)
            _log_iterations(log_dir, index, configuration, report)
            method, family, d = configuration.key
            if reference and report:
                error, status = objective_error(report.objective, reference.objective), report.status.value
                batch.points.append(
                    BenchPoint(configuration.label, math.log10(max(abs(error), ERROR_CLIP)), report.ms_per_iter)
                )
            else:
                error = None
                status = report.status.value if not report else f"reference_{reference.status.value}"
            record = CraneRecord(
                instance=index,
                method=method,
                d=d,
                family=family,
                objective=report.objective,
                error=error,
                iterations=report.iterations,
                ms_per_iter=report.ms_per_iter,
                status=status,
            )
            batch.records.append(record)
            per_config[configuration].append(record)
        logger.info(f"Instance {index + 1}/{len(instances)} (r0={instance.r0:.3f}, theta0={instance.theta0:.3f}) done")

    for configuration, records in per_config.items():
        ok = [r for r in records if r.error is not None]
        method, family, d = configuration.key
        batch.summaries.append(
            CraneRecord(
                instance=GEOMEAN,
                method=method,
                d=d,
                family=family,
                objective=None,
                error=geometric_mean([r.error for r in ok]),
                iterations=float(np.mean([r.iterations for r in ok])) if ok else None,
                ms_per_iter=float(np.mean([r.ms_per_iter for r in ok])) if ok else None,
                status="summary",
                failures=len(records) - len(ok),
            )
        )
        if len(ok) < len(records):
            logger.warning(f"{configuration.label}: {len(records) - len(ok)} failed solves excluded")
    return batch


class ExperimentHarness(CommandRegistry):
    """Commands convergence, structure, crane and bench over one configuration.

    Example:
        >>> harness = ExperimentHarness(ExperimentConfig(n_instances=10))
        >>> result = harness.execute("structure", {"N": 20, "d": 2, "method": "pc", "beta0": True})
        >>> result.data["jac_nnz"]
        1128
    """

    def __init__(self, config: Optional[ExperimentConfig] = None):
        super().__init__()
        self.config = config or ExperimentConfig()
        self.register_handlers_by_prefix("_cmd_")

    def _cmd_convergence(self, params: Dict[str, Any]) -> CommandResult:
        """Convergence table of both methods on q̈ + q = cos t over [0, 10]."""
        families = [Family.parse(f) for f in params.get("family") or ["gauss"]]
        orders = [int(d) for d in params.get("d") or [2]]
        N_list = [int(n) for n in params.get("N") or DEFAULT_N_LIST]
        methods = [Method.parse(m) for m in params.get("methods") or ["sc", "pc"]]
        sampling = params.get("sampling", "grid")

        configurations = [
            (method, CollocationScheme.create(family, d)) for family in families for d in orders for method in methods
        ]
        rows = convergence_study(harmonic_ivp(), harmonic_solution, configurations, N_list, sampling=sampling)
        write_csv(params.get("output"), CONVERGENCE_HEADER, (convergence_row(r) for r in rows))

        slopes, violations = {}, []
        for row in rows:
            label = f"{row.method.label}-{row.family}-{row.d}"
            slopes[label] = row.fitted_slope
            if row.fitted_slope is not None and abs(row.fitted_slope - row.expected_order) > SLOPE_TOLERANCE:
                violations.append(f"{label}: slope {row.fitted_slope:.3f}, expected {row.expected_order}")
        violations = sorted(set(violations))
        if violations:
            return CommandResult.fail("; ".join(violations), slopes=slopes, violations=violations)
        return CommandResult.ok(slopes=slopes, rows=len(rows))

    def _cmd_structure(self, params: Dict[str, Any]) -> CommandResult:
        """Structural counts of a crane transcription beside the closed forms."""
        crane = self.config.crane.model_dump()
        crane["N"] = int(params.get("N", crane["N"]))
        if params.get("beta0"):
            crane["beta"] = 0.0
        ocp = make_crane_ocp(params.get("r0", 1.0), params.get("theta0", 0.3), CraneParams(**crane))
        scheme = CollocationScheme.create(params.get("family", "gauss"), int(params.get("d", 2)))
        nlp = transcribe(ocp, params.get("method", "sc"), scheme)

        counts, closed = structure_counts(nlp), closed_form_counts_for(nlp)
        match = (counts.n_var, counts.n_constraints, counts.jacobian_nnz) == (
            closed.n_var,
            closed.n_constraints,
            closed.jacobian_nnz,
        )
        data = {**counts.to_wire(), "closed_form": closed.to_wire(), "match": match}
        if not match and not counts.assumption_violated:
            return CommandResult.fail("Structural counts differ from the closed forms", **data)
        return CommandResult.ok(**data)

    def _cmd_crane(self, params: Dict[str, Any]) -> CommandResult:
        """Per-instance crane results plus one geometric-mean row per configuration."""
        batch = run_crane_batch(self.config, params.get("iteration_logs"))
        write_records(params.get("output"), CRANE_HEADER, batch.records + batch.summaries)
        return CommandResult.ok(
            instances=len({r.instance for r in batch.records}),
            summary=[
                {
                    "method": s.method,
                    "family": s.family,
                    "d": s.d,
                    "geomean_error": s.error,
                    "ms_per_iter": s.ms_per_iter,
                    "failures": s.failures,
                }
                for s in batch.summaries
            ],
        )

    def _cmd_bench(self, params: Dict[str, Any]) -> CommandResult:
        """Pareto scatter data: label, log10 |error| and time per iteration."""
        batch = run_crane_batch(self.config, params.get("iteration_logs"))
        write_records(params.get("output"), BENCH_HEADER, batch.points)
        return CommandResult.ok(points=len(batch.points), failures=sum(s.failures for s in batch.summaries))
