"""
Collocate - direct collocation for optimal control of second-order ODEs.

Two transcriptions at any collocation order: standard collocation (SC) of
the first-order form x = (q, v), and position-based collocation (PC), which
collocates positions with a semi-Hermite basis and reads velocities off the
position polynomial.

Simulation:
    from collocate import CollocationScheme, harmonic_ivp, simulate

    scheme = CollocationScheme.create("gauss", 2)
    trajectory = simulate(harmonic_ivp(N=20), "pc", scheme)

Optimal control:
    from collocate import initial_guess, make_crane_ocp, solve, transcribe

    nlp = transcribe(make_crane_ocp(1.0, 0.3), "pc", scheme)
    report = solve(nlp, initial_guess(nlp))
"""

from .basis import (
    TAU0,
    CollocationScheme,
    Family,
    LagrangeBasis,
    SemiHermiteBasis,
    collocation_points,
    eval_poly,
    lagrange_basis,
    quadrature_weights,
    semi_hermite_basis,
)
from .exceptions import (
    CollocateError,
    DerivativeMismatchError,
    DimensionError,
    EvaluationError,
    FactorizationError,
    SchemeError,
    StepFailure,
)
from .integrator import (
    ConvergenceRow,
    Method,
    NewtonOptions,
    StageInternals,
    Trajectory,
    convergence_study,
    dense_eval,
    global_error,
    pc_step,
    sc_step,
    simulate,
)
from .model import (
    IVP,
    CraneParams,
    DerivativeReport,
    FirstOrderView,
    SecondOrderOCP,
    SecondOrderODE,
    harmonic_ivp,
    harmonic_solution,
    make_crane_ocp,
    verify_derivatives,
)
from .nlpsolve import SolveOptions, SolveReport, SolveStatus, objective_error, solve
from .transcribe import (
    StructureCounts,
    TranscribedNLP,
    closed_form_counts,
    eval_full,
    initial_guess,
    structure_counts,
    transcribe,
)

__version__ = "0.1.0"
__all__ = [
    # Bases
    "TAU0",
    "Family",
    "CollocationScheme",
    "LagrangeBasis",
    "SemiHermiteBasis",
    "collocation_points",
    "lagrange_basis",
    "semi_hermite_basis",
    "eval_poly",
    "quadrature_weights",
    # Problems
    "SecondOrderODE",
    "FirstOrderView",
    "IVP",
    "SecondOrderOCP",
    "CraneParams",
    "DerivativeReport",
    "make_crane_ocp",
    "verify_derivatives",
    "harmonic_ivp",
    "harmonic_solution",
    # Integration
    "Method",
    "NewtonOptions",
    "StageInternals",
    "Trajectory",
    "ConvergenceRow",
    "sc_step",
    "pc_step",
    "simulate",
    "dense_eval",
    "global_error",
    "convergence_study",
    # Transcription
    "TranscribedNLP",
    "StructureCounts",
    "transcribe",
    "structure_counts",
    "closed_form_counts",
    "initial_guess",
    "eval_full",
    # Solver
    "SolveOptions",
    "SolveReport",
    "SolveStatus",
    "solve",
    "objective_error",
    # Exceptions
    "CollocateError",
    "SchemeError",
    "DimensionError",
    "StepFailure",
    "DerivativeMismatchError",
    "EvaluationError",
    "FactorizationError",
]
