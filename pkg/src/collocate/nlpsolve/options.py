"""Solver configuration."""

from pydantic import BaseModel, ConfigDict, Field


class SolveOptions(BaseModel):
    """Interior-point solver settings.

    Attributes:
        kkt_tol: Convergence tolerance on the unscaled KKT residuals (∞-norm)
        max_iter: Maximum outer iterations
        mu0: Initial barrier parameter
        mu_shrink: Barrier reduction factor
        tau_ftb: Fraction-to-boundary parameter
        delta0: First primal regularization tried after a failed factorization
        delta_c: Constant dual regularization of the constraint rows
        max_regularizations: Regularization increases before giving up
        armijo: Sufficient-decrease constant of the merit line search
        merit_rho: Required fraction of predicted infeasibility reduction
        kappa_sigma: Bound-multiplier safeguard factor
        second_order_correction: Try one corrected step when the full step is rejected

    Example:
        >>> SolveOptions(kkt_tol=1e-6).max_iter
        500
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kkt_tol: float = Field(default=1e-8, gt=0.0)
    max_iter: int = Field(default=500, gt=0)
    mu0: float = Field(default=0.1, gt=0.0)
    mu_shrink: float = Field(default=0.2, gt=0.0, lt=1.0)
    tau_ftb: float = Field(default=0.995, gt=0.0, lt=1.0)
    delta0: float = Field(default=1e-8, gt=0.0)
    delta_c: float = Field(default=1e-10, gt=0.0)
    max_regularizations: int = Field(default=10, ge=0)
    armijo: float = Field(default=1e-4, gt=0.0, lt=0.5)
    merit_rho: float = Field(default=0.1, gt=0.0, lt=1.0)
    kappa_sigma: float = Field(default=1e10, gt=1.0)
    second_order_correction: bool = True
