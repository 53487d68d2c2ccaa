"""Problem definitions: second-order ODEs, IVPs and optimal control problems.

State ordering is x = (q, v) everywhere: components 0..nq-1 are positions,
nq..2nq-1 velocities. Problem authors supply analytic first derivatives;
`verify_derivatives` compares them against central finite differences.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import DerivativeMismatchError, DimensionError

logger = logging.getLogger(__name__)

Array = np.ndarray
AccelFn = Callable[[float, Array, Array, Array, Array], Array]


def _zeros_jacobian(rows: int, cols: int) -> Callable[..., Array]:
    def jac(*_args) -> Array:
        return np.zeros((rows, cols))

    return jac


@dataclass(frozen=True)
class SecondOrderODE:
    """Controlled second-order ODE q̈ = f(t, q, v, u, p).

    Attributes:
        nq: Position dimension
        nu: Control dimension
        npar: Parameter dimension
        accel: f(t, q, v, u, p) -> acceleration of length nq
        jac_q: ∂f/∂q, shape (nq, nq)
        jac_v: ∂f/∂v, shape (nq, nq); may be omitted when not velocity_dependent
        jac_u: ∂f/∂u, shape (nq, nu); may be omitted when nu = 0
        jac_p: ∂f/∂p, shape (nq, npar); may be omitted when npar = 0
        velocity_dependent: True iff f reads v

    Example:
        >>> ode = SecondOrderODE(nq=1, nu=0, npar=0,
        ...                      accel=lambda t, q, v, u, p: -q,
        ...                      jac_q=lambda t, q, v, u, p: -np.eye(1))
    """

    nq: int
    nu: int
    npar: int
    accel: AccelFn
    jac_q: Callable[..., Array]
    jac_v: Optional[Callable[..., Array]] = None
    jac_u: Optional[Callable[..., Array]] = None
    jac_p: Optional[Callable[..., Array]] = None
    velocity_dependent: bool = False

    def __post_init__(self):
        if self.nq < 1 or self.nu < 0 or self.npar < 0:
            raise DimensionError(f"Invalid ODE dimensions nq={self.nq}, nu={self.nu}, npar={self.npar}")
        if self.velocity_dependent and self.jac_v is None:
            raise DimensionError("A velocity-dependent ODE must supply jac_v")
        if self.nu and self.jac_u is None:
            raise DimensionError("An ODE with controls must supply jac_u")
        if self.npar and self.jac_p is None:
            raise DimensionError("An ODE with parameters must supply jac_p")
        # frozen: fill absent Jacobians through object.__setattr__
        if self.jac_v is None:
            object.__setattr__(self, "jac_v", _zeros_jacobian(self.nq, self.nq))
        if self.jac_u is None:
            object.__setattr__(self, "jac_u", _zeros_jacobian(self.nq, self.nu))
        if self.jac_p is None:
            object.__setattr__(self, "jac_p", _zeros_jacobian(self.nq, self.npar))

    @property
    def nx(self) -> int:
        return 2 * self.nq

    def evaluate(self, t: float, q: Array, v: Array, u: Array, p: Array) -> Array:
        a = np.asarray(self.accel(t, q, v, u, p), dtype=float).reshape(-1)
        if a.shape[0] != self.nq:
            raise DimensionError(f"accel returned {a.shape[0]} components, expected {self.nq}")
        return a

    def jacobians(self, t: float, q: Array, v: Array, u: Array, p: Array) -> Tuple[Array, Array, Array, Array]:
        """Return (∂f/∂q, ∂f/∂v, ∂f/∂u, ∂f/∂p) as 2-D arrays."""
        shapes = ((self.nq, self.nq), (self.nq, self.nq), (self.nq, self.nu), (self.nq, self.npar))
        blocks = (self.jac_q, self.jac_v, self.jac_u, self.jac_p)
        return tuple(
            np.asarray(fn(t, q, v, u, p), dtype=float).reshape(shape) for fn, shape in zip(blocks, shapes)
        )


@dataclass(frozen=True)
class FirstOrderView:
    """First-order form x' = f̄(t, x, u, p) = (v, f(t, q, v, u, p)) of an ODE."""

    ode: SecondOrderODE

    @property
    def nx(self) -> int:
        return self.ode.nx

    def split(self, x: Array) -> Tuple[Array, Array]:
        nq = self.ode.nq
        return x[:nq], x[nq:]

    def rhs(self, t: float, x: Array, u: Array, p: Array) -> Array:
        q, v = self.split(x)
        return np.concatenate((v, self.ode.evaluate(t, q, v, u, p)))

    def jac_x(self, t: float, x: Array, u: Array, p: Array) -> Array:
        """∂f̄/∂x = [[0, I], [∂f/∂q, ∂f/∂v]]."""
        nq = self.ode.nq
        q, v = self.split(x)
        fq, fv, _, _ = self.ode.jacobians(t, q, v, u, p)
        jac = np.zeros((2 * nq, 2 * nq))
        jac[:nq, nq:] = np.eye(nq)
        jac[nq:, :nq] = fq
        jac[nq:, nq:] = fv
        return jac

    def jac_up(self, t: float, x: Array, u: Array, p: Array) -> Tuple[Array, Array]:
        """(∂f̄/∂u, ∂f̄/∂p) with zero position rows."""
        nq = self.ode.nq
        q, v = self.split(x)
        _, _, fu, fp = self.ode.jacobians(t, q, v, u, p)
        return (
            np.vstack((np.zeros((nq, self.ode.nu)), fu)),
            np.vstack((np.zeros((nq, self.ode.npar)), fp)),
        )


@dataclass(frozen=True)
class IVP:
    """Initial value problem on an equidistant grid.

    Attributes:
        ode: The second-order ODE
        q0: Initial positions (length nq)
        v0: Initial velocities (length nq)
        T: Horizon
        N: Number of grid intervals
        u: Fixed control (length nu), zeros when omitted
        p: Fixed parameters (length npar), zeros when omitted
    """

    ode: SecondOrderODE
    q0: Array
    v0: Array
    T: float
    N: int
    u: Optional[Array] = None
    p: Optional[Array] = None

    def __post_init__(self):
        if not self.T > 0:
            raise DimensionError(f"Horizon must be positive, got T={self.T}")
        if int(self.N) < 1:
            raise DimensionError(f"Need at least one grid interval, got N={self.N}")
        for name, size in (("q0", self.ode.nq), ("v0", self.ode.nq)):
            if np.asarray(getattr(self, name)).reshape(-1).shape[0] != size:
                raise DimensionError(f"{name} must have length {size}")

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def grid(self) -> Array:
        return self.h * np.arange(self.N + 1)

    @property
    def x0(self) -> Array:
        return np.concatenate((np.asarray(self.q0, dtype=float).reshape(-1), np.asarray(self.v0, dtype=float).reshape(-1)))

    def with_N(self, N: int) -> "IVP":
        return IVP(ode=self.ode, q0=self.q0, v0=self.v0, T=self.T, N=N, u=self.u, p=self.p)


@dataclass(frozen=True)
class SecondOrderOCP:
    """Optimal control problem with second-order dynamics.

    Minimize ∫ L(x, u, p) dt + E(x(T)) subject to q̈ = f, g(x, u, p) ≥ 0 and
    r(x(T), x(0), p) = 0 on a fixed horizon with piecewise-constant controls.

    Attributes:
        ode: Dynamics
        T: Horizon
        N: Number of grid intervals
        stage_cost: L(x, u, p) -> float
        stage_cost_grad: (x, u, p) -> (∂L/∂x, ∂L/∂u, ∂L/∂p)
        terminal_cost: E(x_N) -> float
        terminal_cost_grad: x_N -> ∂E/∂x
        path_constraint: g(x, u, p) -> vector of length nc, convention g ≥ 0
        path_constraint_jac: (x, u, p) -> (∂g/∂x, ∂g/∂u, ∂g/∂p)
        boundary: r(x_T, x_0, p) -> vector of length nr, convention r = 0
        boundary_jac: (x_T, x_0, p) -> (∂r/∂x_T, ∂r/∂x_0, ∂r/∂p)
        nc: Number of path constraints
        nr: Number of boundary constraints
        x_init: Initial state, pinned by the transcription when fix_initial_state
            and otherwise only the start of the initial guess
        x_final: Terminal target used by the initial guess (None: constant guess)
        p_nominal: Nominal parameter vector (initial guess)
        stage_cost_velocity_dependent: True iff L reads v
        constraints_read_parameters: True iff g or r read p
        fix_initial_state: True iff the transcription adds the rows x_0 − x_init = 0
    """

    ode: SecondOrderODE
    T: float
    N: int
    stage_cost: Callable[[Array, Array, Array], float]
    stage_cost_grad: Callable[[Array, Array, Array], Tuple[Array, Array, Array]]
    terminal_cost: Callable[[Array], float]
    terminal_cost_grad: Callable[[Array], Array]
    path_constraint: Callable[[Array, Array, Array], Array]
    path_constraint_jac: Callable[[Array, Array, Array], Tuple[Array, Array, Array]]
    boundary: Callable[[Array, Array, Array], Array]
    boundary_jac: Callable[[Array, Array, Array], Tuple[Array, Array, Array]]
    nc: int
    nr: int
    x_init: Array
    x_final: Optional[Array] = None
    p_nominal: Optional[Array] = None
    stage_cost_velocity_dependent: bool = False
    constraints_read_parameters: bool = False
    fix_initial_state: bool = True

    def __post_init__(self):
        if not self.T > 0:
            raise DimensionError(f"Horizon must be positive, got T={self.T}")
        if int(self.N) < 1:
            raise DimensionError(f"Need at least one grid interval, got N={self.N}")
        if self.nc < 0 or self.nr < 0:
            raise DimensionError(f"Invalid constraint counts nc={self.nc}, nr={self.nr}")
        if np.asarray(self.x_init).reshape(-1).shape[0] != self.ode.nx:
            raise DimensionError(f"x_init must have length {self.ode.nx}")
        if self.x_final is not None and np.asarray(self.x_final).reshape(-1).shape[0] != self.ode.nx:
            raise DimensionError(f"x_final must have length {self.ode.nx}")
        if self.p_nominal is None:
            object.__setattr__(self, "p_nominal", np.zeros(self.ode.npar))
        elif np.asarray(self.p_nominal).reshape(-1).shape[0] != self.ode.npar:
            raise DimensionError(f"p_nominal must have length {self.ode.npar}")

    @property
    def nq(self) -> int:
        return self.ode.nq

    @property
    def nu(self) -> int:
        return self.ode.nu

    @property
    def npar(self) -> int:
        return self.ode.npar

    @property
    def h(self) -> float:
        return self.T / self.N


# ---------------------------------------------------------------------------
# Derivative verification
# ---------------------------------------------------------------------------


@dataclass
class DerivativeReport:
    """Outcome of comparing analytic derivatives with finite differences.

    Attributes:
        max_rel_error: Largest relative error per derivative, e.g. "accel/q"
        tolerance: Relative tolerance a derivative must meet
        n_samples: Number of random points checked
    """

    max_rel_error: Dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-4
    n_samples: int = 0

    @property
    def failures(self) -> List[str]:
        return [name for name, err in self.max_rel_error.items() if not err <= self.tolerance]

    @property
    def ok(self) -> bool:
        return not self.failures

    def raise_for_failures(self) -> None:
        if self.failures:
            worst = ", ".join(f"{name} ({self.max_rel_error[name]:.2e})" for name in self.failures)
            raise DerivativeMismatchError(f"Analytic derivatives disagree with finite differences: {worst}", report=self)

    def to_wire(self) -> Dict[str, object]:
        return {"ok": self.ok, "tolerance": self.tolerance, "max_rel_error": dict(self.max_rel_error)}

    def __bool__(self) -> bool:
        return self.ok


def central_difference(fun: Callable[[Array], Array], x: Array, step: float = 1e-6) -> Array:
    """Central-difference Jacobian of a vector function; columns follow x."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(fun(x), dtype=float))
    jac = np.zeros((f0.shape[0], x.shape[0]))
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = step
        jac[:, j] = (np.atleast_1d(fun(x + e)) - np.atleast_1d(fun(x - e))) / (2.0 * step)
    return jac


def _relative_error(analytic: Array, numeric: Array) -> float:
    analytic = np.asarray(analytic, dtype=float).reshape(numeric.shape)
    if numeric.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric)) / max(1.0, float(np.max(np.abs(numeric)))))


def _record(report: DerivativeReport, name: str, analytic: Array, numeric: Array) -> None:
    err = _relative_error(analytic, numeric)
    report.max_rel_error[name] = max(report.max_rel_error.get(name, 0.0), err)


def _check_ode(report: DerivativeReport, ode: SecondOrderODE, rng: np.random.Generator, T: float, step: float) -> None:
    t = float(rng.uniform(0.0, T))
    q, v = rng.standard_normal(ode.nq), rng.standard_normal(ode.nq)
    u, p = rng.standard_normal(ode.nu), rng.standard_normal(ode.npar)
    fq, fv, fu, fp = ode.jacobians(t, q, v, u, p)
    _record(report, "accel/q", fq, central_difference(lambda y: ode.evaluate(t, y, v, u, p), q, step))
    _record(report, "accel/v", fv, central_difference(lambda y: ode.evaluate(t, q, y, u, p), v, step))
    _record(report, "accel/u", fu, central_difference(lambda y: ode.evaluate(t, q, v, y, p), u, step))
    _record(report, "accel/p", fp, central_difference(lambda y: ode.evaluate(t, q, v, u, y), p, step))


def _check_ocp(report: DerivativeReport, ocp: SecondOrderOCP, rng: np.random.Generator, step: float) -> None:
    nx, nu, npar = ocp.ode.nx, ocp.nu, ocp.npar
    x, xT, x0 = rng.standard_normal(nx), rng.standard_normal(nx), rng.standard_normal(nx)
    u, p = rng.standard_normal(nu), rng.standard_normal(npar)

    Lx, Lu, Lp = ocp.stage_cost_grad(x, u, p)
    _record(report, "L/x", Lx, central_difference(lambda y: ocp.stage_cost(y, u, p), x, step))
    _record(report, "L/u", Lu, central_difference(lambda y: ocp.stage_cost(x, y, p), u, step))
    _record(report, "L/p", Lp, central_difference(lambda y: ocp.stage_cost(x, u, y), p, step))
    _record(report, "E/x", ocp.terminal_cost_grad(xT), central_difference(ocp.terminal_cost, xT, step))

    if ocp.nc:
        gx, gu, gp = ocp.path_constraint_jac(x, u, p)
        _record(report, "g/x", gx, central_difference(lambda y: ocp.path_constraint(y, u, p), x, step))
        _record(report, "g/u", gu, central_difference(lambda y: ocp.path_constraint(x, y, p), u, step))
        _record(report, "g/p", gp, central_difference(lambda y: ocp.path_constraint(x, u, y), p, step))
    if ocp.nr:
        rT, r0, rp = ocp.boundary_jac(xT, x0, p)
        _record(report, "r/xT", rT, central_difference(lambda y: ocp.boundary(y, x0, p), xT, step))
        _record(report, "r/x0", r0, central_difference(lambda y: ocp.boundary(xT, y, p), x0, step))
        _record(report, "r/p", rp, central_difference(lambda y: ocp.boundary(xT, x0, y), p, step))


def verify_derivatives(
    problem: Union[SecondOrderODE, SecondOrderOCP],
    n_samples: int = 100,
    seed: int = 0,
    step: float = 1e-6,
    tolerance: float = 1e-4,
) -> DerivativeReport:
    """Compare every analytic derivative against central finite differences.

    Samples are standard-normal states, controls and parameters; time is
    uniform on the horizon (or [0, 1] for a bare ODE). For a
    velocity-independent ODE the "accel/v" entry confirms ∂f/∂v = 0.

    Args:
        problem: A SecondOrderODE or SecondOrderOCP
        n_samples: Number of random points
        seed: Seed for numpy's default generator
        step: Finite-difference step
        tolerance: Relative tolerance for the report's ok flag

    Returns:
        DerivativeReport with max relative error per derivative
    """
    rng = np.random.default_rng(seed)
    report = DerivativeReport(tolerance=tolerance, n_samples=n_samples)
    ode = problem.ode if isinstance(problem, SecondOrderOCP) else problem
    T = problem.T if isinstance(problem, SecondOrderOCP) else 1.0
    for _ in range(n_samples):
        _check_ode(report, ode, rng, T, step)
        if isinstance(problem, SecondOrderOCP):
            _check_ocp(report, problem, rng, step)
    if not report.ok:
        logger.warning(f"Derivative check failed for: {', '.join(report.failures)}")
    return report


# ---------------------------------------------------------------------------
# Crane model
# ---------------------------------------------------------------------------


class CraneParams(BaseModel):
    """Parameters of the crane benchmark.

    Attributes:
        r_min: Lower bound on the cart position
        r_max: Upper bound on the cart position
        T: Horizon
        beta: Pendulum friction coefficient
        a: Gravitational acceleration
        N: Number of grid intervals
    """

    model_config = ConfigDict(extra="ignore", frozen=True)

    r_min: float = -3.0
    r_max: float = 3.0
    T: float = Field(default=10.0, gt=0.0)
    beta: float = Field(default=0.1, ge=0.0)
    a: float = 9.81
    N: int = Field(default=20, ge=1)

    @model_validator(mode="after")
    def _check_bounds(self) -> "CraneParams":
        if not self.r_min < self.r_max:
            raise ValueError(f"r_min ({self.r_min}) must be below r_max ({self.r_max})")
        return self


def crane_ode(beta: float = 0.1, a: float = 9.81) -> SecondOrderODE:
    """Cart position r and pendulum angle θ driven by the cart acceleration u."""

    def accel(t, q, v, u, p):
        theta = q[1]
        return np.array([u[0], -u[0] * np.cos(theta) - a * np.sin(theta) - beta * v[1]])

    def jac_q(t, q, v, u, p):
        theta = q[1]
        return np.array([[0.0, 0.0], [0.0, u[0] * np.sin(theta) - a * np.cos(theta)]])

    def jac_v(t, q, v, u, p):
        return np.array([[0.0, 0.0], [0.0, -beta]])

    def jac_u(t, q, v, u, p):
        return np.array([[1.0], [-np.cos(q[1])]])

    return SecondOrderODE(
        nq=2,
        nu=1,
        npar=0,
        accel=accel,
        jac_q=jac_q,
        jac_v=jac_v,
        jac_u=jac_u,
        velocity_dependent=beta != 0.0,
    )


def make_crane_ocp(r0: float, theta0: float, params: Optional[CraneParams] = None) -> SecondOrderOCP:
    """Build the crane OCP steering (r0, θ0, 0, 0) to rest at the origin.

    L = u² + r² + θ², E = 0, r_min ≤ r ≤ r_max and full initial and terminal
    states fixed through r(·) (nr = 8).

    Example:
        >>> ocp = make_crane_ocp(1.0, 0.3)
        >>> ocp.nr
        8
    """
    params = params or CraneParams()
    x_init = np.array([r0, theta0, 0.0, 0.0], dtype=float)
    eye = np.eye(4)

    def stage_cost(x, u, p):
        return float(u[0] ** 2 + x[0] ** 2 + x[1] ** 2)

    def stage_cost_grad(x, u, p):
        return np.array([2.0 * x[0], 2.0 * x[1], 0.0, 0.0]), np.array([2.0 * u[0]]), np.zeros(0)

    def path_constraint(x, u, p):
        return np.array([x[0] - params.r_min, params.r_max - x[0]])

    def path_constraint_jac(x, u, p):
        gx = np.zeros((2, 4))
        gx[0, 0], gx[1, 0] = 1.0, -1.0
        return gx, np.zeros((2, 1)), np.zeros((2, 0))

    def boundary(xT, x0, p):
        return np.concatenate((x0 - x_init, xT))

    def boundary_jac(xT, x0, p):
        zero = np.zeros((4, 4))
        return np.vstack((zero, eye)), np.vstack((eye, zero)), np.zeros((8, 0))

    return SecondOrderOCP(
        ode=crane_ode(params.beta, params.a),
        T=params.T,
        N=params.N,
        stage_cost=stage_cost,
        stage_cost_grad=stage_cost_grad,
        terminal_cost=lambda x: 0.0,
        terminal_cost_grad=lambda x: np.zeros(4),
        path_constraint=path_constraint,
        path_constraint_jac=path_constraint_jac,
        boundary=boundary,
        boundary_jac=boundary_jac,
        nc=2,
        nr=8,
        x_init=x_init,
        x_final=np.zeros(4),
    )


# ---------------------------------------------------------------------------
# Reference initial value problems
# ---------------------------------------------------------------------------


def harmonic_ivp(N: int = 10, T: float = 10.0) -> IVP:
    """q̈ + q = cos t, q(0) = q̇(0) = 0: resonant forcing with growing amplitude."""
    ode = SecondOrderODE(
        nq=1,
        nu=0,
        npar=0,
        accel=lambda t, q, v, u, p: np.cos(t) - q,
        jac_q=lambda t, q, v, u, p: -np.eye(1),
    )
    return IVP(ode=ode, q0=np.zeros(1), v0=np.zeros(1), T=T, N=N)


def harmonic_solution(t: float) -> Tuple[Array, Array]:
    """Closed form q = t sin t / 2 of `harmonic_ivp`."""
    return np.array([0.5 * t * np.sin(t)]), np.array([0.5 * (np.sin(t) + t * np.cos(t))])


def polynomial_ivp(d: int, N: int = 1, T: float = 1.0) -> IVP:
    """q̈ = t^{d-1} from rest; position-based collocation of order d is exact."""
    ode = SecondOrderODE(
        nq=1,
        nu=0,
        npar=0,
        accel=lambda t, q, v, u, p: np.array([t ** (d - 1)]),
        jac_q=lambda t, q, v, u, p: np.zeros((1, 1)),
    )
    return IVP(ode=ode, q0=np.zeros(1), v0=np.zeros(1), T=T, N=N)


def polynomial_solution(d: int) -> Callable[[float], Tuple[Array, Array]]:
    def solution(t: float) -> Tuple[Array, Array]:
        return np.array([t ** (d + 1) / (d * (d + 1))]), np.array([t**d / d])

    return solution


def free_motion_ode(nq: int = 1) -> SecondOrderODE:
    """q̈ = 0."""
    return SecondOrderODE(
        nq=nq,
        nu=0,
        npar=0,
        accel=lambda t, q, v, u, p: np.zeros(nq),
        jac_q=_zeros_jacobian(nq, nq),
    )
