"""Interior-point NLP solver for transcribed optimal control problems.

Usage:
    from collocate.nlpsolve import SolveOptions, solve

    report = solve(nlp, guess, SolveOptions(kkt_tol=1e-8))
    if report:
        print(report.objective, report.ms_per_iter)
"""

from .hessian import BlockBFGS
from .ipm import InteriorPointSolver, solve
from .options import SolveOptions
from .problem import DenseNLP, NLPProblem
from .report import IterationRecord, SolveReport, SolveStatus, objective_error, write_iteration_log

__all__ = [
    # Solver
    "solve",
    "InteriorPointSolver",
    "SolveOptions",
    "BlockBFGS",
    # Problems
    "NLPProblem",
    "DenseNLP",
    # Results
    "SolveReport",
    "SolveStatus",
    "IterationRecord",
    "objective_error",
    "write_iteration_log",
]
