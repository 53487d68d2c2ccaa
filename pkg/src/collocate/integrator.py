"""Collocation steps, simulation, dense output and convergence studies.

A collocation step on [t_k, t_k + h] is described by a `StageSystem`: the
interval polynomial is linear in (x_k, z_k), so interpolation, end-of-interval
evaluation and the linear part of the stage residual are constant matrices;
only the model evaluation at the collocation points is nonlinear.

    SC  z_k holds the interpolated states at τ_1..τ_d (d·2nq values) and
        R_i = ṗ_0(τ_i)·x_k + Σ_j ṗ_j(τ_i)·z_j − h·f̄(t_i, z_i, u, p)
    PC  z_k holds the interpolated positions at τ_1..τ_d (d·nq values) and
        R_i = ψ̈(τ_i) − h²·f(t_i, z_i, w_i, u, p),  w_i = ψ̇(τ_i)/h

The transcription reuses the same systems for its stage and dynamics rows.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid

from .basis import CollocationScheme, LagrangeBasis, SemiHermiteBasis, lagrange_basis, semi_hermite_basis
from .exceptions import DimensionError, StepFailure
from .model import IVP, FirstOrderView, SecondOrderODE

logger = logging.getLogger(__name__)

Array = np.ndarray
Reference = Callable[[float], Tuple[Array, Array]]

#: Smallest error kept when fitting convergence slopes (rounding floor).
ERROR_FLOOR = 1e-12


class Method(str, Enum):
    """Collocation transcription."""

    SC = "sc"
    PC = "pc"

    @classmethod
    def parse(cls, value: Union[str, "Method"]) -> "Method":
        if isinstance(value, Method):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DimensionError(f"Unknown collocation method: {value!r} (expected 'sc' or 'pc')") from None

    @property
    def label(self) -> str:
        return self.value.upper()


@dataclass(frozen=True)
class NewtonOptions:
    """Stage-equation Newton settings.

    Attributes:
        tol: Residual ∞-norm target, scaled by max(1, ‖x_k‖∞)
        step_tol: Increment ∞-norm, relative to max(1, ‖z‖∞), that ends the iteration
        max_iter: Maximum Newton iterations
        max_halvings: Maximum step halvings in the residual line search
    """

    tol: float = 1e-12
    step_tol: float = 1e-14
    max_iter: int = 50
    max_halvings: int = 30


@dataclass(frozen=True)
class StageInternals:
    """Interval internals z_k reshaped per collocation point.

    Attributes:
        method: SC or PC
        z: (d, 2nq) interpolated states for SC, (d, nq) positions for PC
    """

    method: Method
    z: Array

    @property
    def n_int(self) -> int:
        return int(np.asarray(self.z).size)

    def flat(self) -> Array:
        return np.asarray(self.z).reshape(-1)


@dataclass(frozen=True)
class StageJacobian:
    """Partial derivatives of the stage residual of one interval."""

    dx: Array
    dz: Array
    du: Array
    dp: Array


@dataclass(frozen=True)
class StagePattern:
    """Structural nonzeros of one interval's rows, read off the equation form.

    Basis coefficients count as nonzero; model Jacobians are dense in every
    argument block the model reads.

    Attributes:
        dx, dz, du, dp: Stage-residual rows against x_k, z_k, u_k, p
        end_x, end_z: End-of-interval map x_{k+1} against x_k, z_k
    """

    dx: Array
    dz: Array
    du: Array
    dp: Array
    end_x: Array
    end_z: Array


def _bool_product(a: Array, b: Array) -> Array:
    return (a.astype(int) @ b.astype(int)) > 0


class StageSystem(ABC):
    """Collocation equations of one interval with step size h.

    Subclasses fill the constant linear maps:

        interpolation   x(τ) = Px(τ)·x_k + Pz(τ)·z
        stage states    ξ = Sx·x_k + Sz·z,  ξ_i = x(τ_i)
        residual        R = Lx·x_k + Lz·z − scale·F(t_i, ξ_i, u, p)

    and the model evaluation F with its Jacobian with respect to ξ_i.
    """

    method: Method

    def __init__(self, ode: SecondOrderODE, scheme: CollocationScheme, h: float):
        if not h > 0:
            raise DimensionError(f"Step size must be positive, got h={h}")
        self.ode = ode
        self.scheme = scheme
        self.h = float(h)
        self.nq = ode.nq
        self.nx = ode.nx
        self.d = scheme.d
        self.tau = scheme.points

    @property
    @abstractmethod
    def point_size(self) -> int:
        """Residual rows (and internal values) per collocation point."""
        ...

    @property
    def n_int(self) -> int:
        return self.d * self.point_size

    @abstractmethod
    def interpolation_maps(self, tau: float, derivative: int = 0) -> Tuple[Array, Array]:
        """(Px, Pz) for the state, or its time derivative when derivative=1."""
        ...

    @abstractmethod
    def model(self, t: float, xi: Array, u: Array, p: Array) -> Array:
        ...

    @abstractmethod
    def model_jacobians(self, t: float, xi: Array, u: Array, p: Array) -> Tuple[Array, Array, Array]:
        """(∂F/∂ξ, ∂F/∂u, ∂F/∂p) at one collocation point."""
        ...

    @abstractmethod
    def initial_internals(self, x_k: Array) -> Array:
        ...

    @abstractmethod
    def pattern(self) -> StagePattern:
        ...

    @abstractmethod
    def stage_maps(self) -> Tuple[Array, Array]:
        """(Sx, Sz) with the interpolation conditions at τ_i imposed exactly."""
        ...

    def _finish(self, Lx: Array, Lz: Array, scale: float) -> None:
        self.Lx, self.Lz, self.scale = Lx, Lz, scale
        self.Sx, self.Sz = self.stage_maps()
        self.Ex, self.Ez = self.interpolation_maps(1.0)

    def times(self, t_k: float) -> Array:
        return t_k + self.h * self.tau

    def stage_states(self, x_k: Array, z: Array) -> Array:
        """Interpolated states at τ_1..τ_d, shape (d, 2nq)."""
        return (self.Sx @ x_k + self.Sz @ z).reshape(self.d, self.nx)

    def residual(self, x_k: Array, z: Array, u: Array, p: Array, t_k: float) -> Array:
        xi = self.stage_states(x_k, z)
        F = np.concatenate([self.model(t, xi[i], u, p) for i, t in enumerate(self.times(t_k))])
        return self.Lx @ x_k + self.Lz @ z - self.scale * F

    def jacobian(self, x_k: Array, z: Array, u: Array, p: Array, t_k: float) -> StageJacobian:
        xi = self.stage_states(x_k, z)
        parts = [self.model_jacobians(t, xi[i], u, p) for i, t in enumerate(self.times(t_k))]
        F_xi = scipy.linalg.block_diag(*[part[0] for part in parts])
        du = np.vstack([part[1] for part in parts])
        dp = np.vstack([part[2] for part in parts])
        return StageJacobian(
            dx=self.Lx - self.scale * (F_xi @ self.Sx),
            dz=self.Lz - self.scale * (F_xi @ self.Sz),
            du=-self.scale * du,
            dp=-self.scale * dp,
        )

    def end_state(self, x_k: Array, z: Array) -> Array:
        return self.Ex @ x_k + self.Ez @ z

    def interpolate(self, x_k: Array, z: Array, tau: float, derivative: int = 0) -> Array:
        Px, Pz = self.interpolation_maps(tau, derivative)
        return Px @ x_k + Pz @ z

    def internals(self, z: Array) -> StageInternals:
        return StageInternals(method=self.method, z=np.asarray(z).reshape(self.d, self.point_size))


class SCStageSystem(StageSystem):
    """Standard collocation on the first-order form x = (q, v)."""

    method = Method.SC

    def __init__(self, fov: FirstOrderView, basis: LagrangeBasis, h: float):
        super().__init__(fov.ode, basis.scheme, h)
        self.fov = fov
        self.basis = basis
        eye = np.eye(self.nx)
        rates = basis.matrix(self.tau, 1)
        self._finish(np.kron(rates[:, :1], eye), np.kron(rates[:, 1:], eye), self.h)

    @property
    def point_size(self) -> int:
        return self.nx

    def interpolation_maps(self, tau: float, derivative: int = 0) -> Tuple[Array, Array]:
        vals = self.basis.values(tau, derivative) / self.h**derivative
        eye = np.eye(self.nx)
        return vals[0] * eye, np.kron(vals[1:][None, :], eye)

    def stage_maps(self) -> Tuple[Array, Array]:
        return np.zeros((self.n_int, self.nx)), np.eye(self.n_int)

    def model(self, t, xi, u, p):
        return self.fov.rhs(t, xi, u, p)

    def model_jacobians(self, t, xi, u, p):
        fu, fp = self.fov.jac_up(t, xi, u, p)
        return self.fov.jac_x(t, xi, u, p), fu, fp

    def initial_internals(self, x_k: Array) -> Array:
        return np.tile(x_k, self.d)

    def pattern(self) -> StagePattern:
        nq, nx, d, ode = self.nq, self.nx, self.d, self.ode
        eye = np.eye(nx, dtype=bool)
        fbar = np.zeros((nx, nx), dtype=bool)
        fbar[:nq, nq:] = np.eye(nq, dtype=bool)
        fbar[nq:, :nq] = True
        fbar[nq:, nq:] = ode.velocity_dependent
        accel_rows = np.r_[np.zeros(nq, dtype=bool), np.ones(nq, dtype=bool)][:, None]
        return StagePattern(
            dx=np.kron(np.ones((d, 1), dtype=bool), eye),
            dz=np.kron(np.ones((d, d), dtype=bool), eye) | np.kron(np.eye(d, dtype=bool), fbar),
            du=np.tile(accel_rows & np.ones((1, ode.nu), dtype=bool), (d, 1)),
            dp=np.tile(accel_rows & np.ones((1, ode.npar), dtype=bool), (d, 1)),
            end_x=eye,
            end_z=np.kron(np.ones((1, d), dtype=bool), eye),
        )


class PCStageSystem(StageSystem):
    """Position-based collocation: positions at τ_i, velocities from ψ̇/h."""

    method = Method.PC

    def __init__(self, ode: SecondOrderODE, basis: SemiHermiteBasis, h: float):
        super().__init__(ode, basis.scheme, h)
        self.basis = basis
        d, eye = self.d, np.eye(self.nq)
        acc = basis.matrix(self.tau, 2)
        Lx = np.hstack((np.kron(acc[:, :1], eye), np.kron(self.h * acc[:, d + 1 :], eye)))
        self._finish(Lx, np.kron(acc[:, 1 : d + 1], eye), self.h**2)

    @property
    def point_size(self) -> int:
        return self.nq

    def _position_row(self, vals: Array, h_power: int) -> Tuple[Array, Array]:
        d, eye, h = self.d, np.eye(self.nq), self.h
        scale = h**h_power
        Px = np.hstack((vals[0] * scale * eye, vals[d + 1] * h * scale * eye))
        return Px, np.kron(vals[1 : d + 1][None, :] * scale, eye)

    def interpolation_maps(self, tau: float, derivative: int = 0) -> Tuple[Array, Array]:
        # position ψ(τ) and velocity ψ̇(τ)/h, differentiated in t when asked
        q_rows = self._position_row(self.basis.values(tau, derivative), -derivative)
        v_rows = self._position_row(self.basis.values(tau, derivative + 1), -(derivative + 1))
        return np.vstack((q_rows[0], v_rows[0])), np.vstack((q_rows[1], v_rows[1]))

    def stage_maps(self) -> Tuple[Array, Array]:
        nq, d = self.nq, self.d
        Sx = np.zeros((d * 2 * nq, 2 * nq))
        Sz = np.zeros((d * 2 * nq, d * nq))
        for i, tau in enumerate(self.tau):
            w_rows = slice(2 * nq * i + nq, 2 * nq * (i + 1))
            Px, Pz = self.interpolation_maps(tau)
            Sz[2 * nq * i : 2 * nq * i + nq, nq * i : nq * (i + 1)] = np.eye(nq)
            Sx[w_rows], Sz[w_rows] = Px[nq:], Pz[nq:]
        return Sx, Sz

    def model(self, t, xi, u, p):
        return self.ode.evaluate(t, xi[: self.nq], xi[self.nq :], u, p)

    def model_jacobians(self, t, xi, u, p):
        fq, fv, fu, fp = self.ode.jacobians(t, xi[: self.nq], xi[self.nq :], u, p)
        return np.hstack((fq, fv)), fu, fp

    def initial_internals(self, x_k: Array) -> Array:
        q_k, v_k = x_k[: self.nq], x_k[self.nq :]
        return np.concatenate([q_k + self.h * t * v_k for t in self.tau])

    def pattern(self) -> StagePattern:
        nq, d, ode = self.nq, self.d, self.ode
        eye = np.eye(nq, dtype=bool)
        column = np.ones((d, 1), dtype=bool)
        # ξ_i = (z_i, w_i): positions select z_i, w_i reads q_k, v_k and every z_j
        Sx = np.zeros((d * 2 * nq, 2 * nq), dtype=bool)
        Sz = np.zeros((d * 2 * nq, d * nq), dtype=bool)
        for i in range(d):
            q_rows = slice(2 * nq * i, 2 * nq * i + nq)
            w_rows = slice(2 * nq * i + nq, 2 * nq * (i + 1))
            Sz[q_rows, nq * i : nq * (i + 1)] = eye
            Sx[w_rows] = np.hstack((eye, eye))
            Sz[w_rows] = np.kron(np.ones((1, d), dtype=bool), eye)
        F = np.hstack((np.ones((nq, nq), dtype=bool), np.full((nq, nq), ode.velocity_dependent)))
        blocks = np.kron(np.eye(d, dtype=bool), F)
        return StagePattern(
            dx=np.hstack((np.kron(column, eye), np.kron(column, eye))) | _bool_product(blocks, Sx),
            dz=np.kron(np.ones((d, d), dtype=bool), eye) | _bool_product(blocks, Sz),
            du=np.ones((d * nq, ode.nu), dtype=bool),
            dp=np.ones((d * nq, ode.npar), dtype=bool),
            end_x=np.kron(np.ones((2, 2), dtype=bool), eye),
            end_z=np.kron(np.ones((2, d), dtype=bool), eye),
        )


@lru_cache(maxsize=None)
def _lagrange(scheme: CollocationScheme) -> LagrangeBasis:
    return lagrange_basis(scheme)


@lru_cache(maxsize=None)
def _semi_hermite(scheme: CollocationScheme) -> SemiHermiteBasis:
    return semi_hermite_basis(scheme)


@lru_cache(maxsize=256)
def stage_system(method: Union[str, Method], ode: SecondOrderODE, scheme: CollocationScheme, h: float) -> StageSystem:
    """Build (and cache) the stage system of a method on a given step size."""
    method = Method.parse(method)
    if method is Method.SC:
        return SCStageSystem(FirstOrderView(ode), _lagrange(scheme), h)
    return PCStageSystem(ode, _semi_hermite(scheme), h)


def solve_stages(
    system: StageSystem,
    x_k: Array,
    u: Array,
    p: Array,
    t_k: float,
    options: Optional[NewtonOptions] = None,
) -> Tuple[Array, float, int]:
    """Damped Newton on the stage residual.

    Stops once the Newton increment is negligible against z; a residual below
    tolerance alone does not end the iteration. A line search that stalls
    with the residual at or below tolerance counts as converged.

    Returns:
        (z, final residual ∞-norm, iterations)

    Raises:
        StepFailure: no convergence within max_iter, or line search stalled
    """
    options = options or NewtonOptions()
    tol = options.tol * max(1.0, float(np.max(np.abs(x_k))) if x_k.size else 1.0)
    z = system.initial_internals(x_k)
    R = system.residual(x_k, z, u, p, t_k)
    norm = float(np.max(np.abs(R)))
    for iteration in range(options.max_iter):
        J = system.jacobian(x_k, z, u, p, t_k).dz
        try:
            dz = scipy.linalg.solve(J, -R)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise StepFailure(f"Singular stage Jacobian: {e}", residual=norm, iterations=iteration) from e
        if float(np.max(np.abs(dz))) <= options.step_tol * max(1.0, float(np.max(np.abs(z)))):
            z = z + dz
            R = system.residual(x_k, z, u, p, t_k)
            norm = min(norm, float(np.max(np.abs(R))))
            logger.debug(f"Stage Newton converged in {iteration + 1} iterations (|R|={norm:.2e})")
            return z, norm, iteration + 1
        alpha = 1.0
        for _ in range(options.max_halvings):
            trial = z + alpha * dz
            R_trial = system.residual(x_k, trial, u, p, t_k)
            norm_trial = float(np.max(np.abs(R_trial)))
            if norm_trial < (1.0 - 1e-4 * alpha) * norm:
                break
            alpha *= 0.5
        else:
            if norm <= tol:
                logger.debug(f"Stage Newton stopped at rounding level in {iteration} iterations (|R|={norm:.2e})")
                return z, norm, iteration
            raise StepFailure(
                f"Stage line search stalled at residual {norm:.3e}", residual=norm, iterations=iteration
            )
        z, R, norm = trial, R_trial, norm_trial
    if norm <= tol:
        return z, norm, options.max_iter
    raise StepFailure(
        f"Stage Newton did not converge in {options.max_iter} iterations (residual {norm:.3e})",
        residual=norm,
        iterations=options.max_iter,
    )


def _as_vector(value, size: int) -> Array:
    if value is None:
        return np.zeros(size)
    return np.asarray(value, dtype=float).reshape(-1)


def sc_step(
    fov: FirstOrderView,
    basis: LagrangeBasis,
    x_k: Array,
    u_k: Array,
    p: Array,
    t_k: float,
    h: float,
    options: Optional[NewtonOptions] = None,
) -> Tuple[Array, StageInternals]:
    """One standard-collocation step from x_k; returns (x_{k+1}, internals)."""
    system = SCStageSystem(fov, basis, h)
    x_k = np.asarray(x_k, dtype=float)
    z, _, _ = solve_stages(system, x_k, _as_vector(u_k, fov.ode.nu), _as_vector(p, fov.ode.npar), t_k, options)
    return system.end_state(x_k, z), system.internals(z)


def pc_step(
    ode: SecondOrderODE,
    basis: SemiHermiteBasis,
    x_k: Array,
    u_k: Array,
    p: Array,
    t_k: float,
    h: float,
    options: Optional[NewtonOptions] = None,
) -> Tuple[Array, StageInternals]:
    """One position-based collocation step from x_k = (q_k, v_k)."""
    system = PCStageSystem(ode, basis, h)
    x_k = np.asarray(x_k, dtype=float)
    z, _, _ = solve_stages(system, x_k, _as_vector(u_k, ode.nu), _as_vector(p, ode.npar), t_k, options)
    return system.end_state(x_k, z), system.internals(z)


@dataclass
class Trajectory:
    """Grid states, interval internals and the piecewise-polynomial output.

    Attributes:
        scheme: Collocation scheme
        method: SC or PC
        x: (N+1, 2nq) grid states ordered (q, v)
        z: (N, n_int) flattened internals per interval
        h: Step size
        T: Horizon
        system: Stage system used to build the trajectory
        controls: (N, nu) piecewise-constant controls
        p: Parameters
    """

    scheme: CollocationScheme
    method: Method
    x: Array
    z: Array
    h: float
    T: float
    system: StageSystem = field(repr=False)
    controls: Array = field(default=None, repr=False)
    p: Array = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.z.shape[0]

    @property
    def nq(self) -> int:
        return self.system.nq

    @property
    def grid(self) -> Array:
        return self.h * np.arange(self.N + 1)

    def internals(self, k: int) -> StageInternals:
        return self.system.internals(self.z[k])

    def locate(self, t: float) -> Tuple[int, float]:
        """Interval index and local τ for time t (t outside [0, T] raises)."""
        slack = 1e-12 * max(1.0, self.T)
        if not (-slack <= t <= self.T + slack):
            raise DimensionError(f"t={t} outside [0, {self.T}]")
        s = min(max(t, 0.0), self.T) / self.h
        k = min(int(math.floor(s)), self.N - 1)
        return k, s - k

    def on_interval(self, k: int, tau: float, derivative: int = 0) -> Array:
        return self.system.interpolate(self.x[k], self.z[k], tau, derivative)

    def state(self, t: float) -> Array:
        s = t / self.h
        nearest = int(round(s))
        if abs(s - nearest) <= 1e-12 * max(1.0, abs(s)) and 0 <= nearest <= self.N:
            return self.x[nearest].copy()
        k, tau = self.locate(t)
        return self.on_interval(k, tau)

    def collocation_defect(self, t: float) -> Array:
        """q̇̃(t) − ṽ(t): time derivative of the position part minus the velocity part."""
        k, tau = self.locate(t)
        x = self.on_interval(k, tau)
        rate = self.on_interval(k, tau, derivative=1)
        return rate[: self.nq] - x[self.nq :]


def simulate(
    ivp: IVP,
    method: Union[str, Method],
    scheme: CollocationScheme,
    u: Optional[Array] = None,
    p: Optional[Array] = None,
    options: Optional[NewtonOptions] = None,
) -> Trajectory:
    """Integrate an IVP with N collocation steps.

    Args:
        ivp: Initial value problem
        method: "sc" or "pc"
        scheme: Collocation scheme
        u: Fixed control (length nu) or piecewise-constant controls (N, nu);
            defaults to ivp.u, then zeros
        p: Parameters; defaults to ivp.p, then zeros
        options: Newton settings

    Raises:
        StepFailure: tagged with the failing interval index
    """
    method = Method.parse(method)
    ode, N, h = ivp.ode, int(ivp.N), ivp.h
    system = stage_system(method, ode, scheme, h)
    u = ivp.u if u is None else u
    controls = np.zeros((N, ode.nu)) if u is None else np.asarray(u, dtype=float)
    if controls.ndim <= 1:
        controls = np.tile(controls.reshape(1, -1), (N, 1))
    if controls.shape != (N, ode.nu):
        raise DimensionError(f"Controls must have shape ({ode.nu},) or ({N}, {ode.nu}), got {controls.shape}")
    p = _as_vector(ivp.p if p is None else p, ode.npar)

    x = np.zeros((N + 1, ode.nx))
    z = np.zeros((N, system.n_int))
    x[0] = ivp.x0
    for k in range(N):
        t_k = k * h
        try:
            z[k], _, _ = solve_stages(system, x[k], controls[k], p, t_k, options)
        except StepFailure as e:
            raise e.at_interval(k) from e
        x[k + 1] = system.end_state(x[k], z[k])
    logger.debug(f"Simulated {method.label} {scheme.label} with N={N}")
    return Trajectory(scheme=scheme, method=method, x=x, z=z, h=h, T=ivp.T, system=system, controls=controls, p=p)


def dense_eval(trajectory: Trajectory, t: float) -> Tuple[Array, Array]:
    """Evaluate the dense output at t: SC through φ, PC through (ψ, ψ̇/h).

    Grid times return the stored x_k exactly.
    """
    x = trajectory.state(t)
    return x[: trajectory.nq], x[trajectory.nq :]


_SAMPLING_ALIASES = {"dense": "dense", "grid": "grid", "nodal": "grid"}


def _component_slice(nq: int, component: str) -> slice:
    slices = {"both": slice(0, 2 * nq), "position": slice(0, nq), "velocity": slice(nq, 2 * nq)}
    if component not in slices:
        raise ValueError(f"component must be one of {sorted(slices)}, got {component!r}")
    return slices[component]


def global_error(
    trajectory: Trajectory,
    reference: Reference,
    samples_per_interval: int = 20,
    sampling: str = "dense",
    component: str = "both",
) -> float:
    """L1 distance over [0, T] between the trajectory and a reference solution.

    The pointwise distance is Σ|q − q_ref| + Σ|v − v_ref| (restricted by
    `component`). "dense" integrates it with the trapezoidal rule on
    `samples_per_interval` uniform subintervals per grid interval; "grid"
    (alias "nodal") integrates over the grid points only.
    """
    if sampling not in _SAMPLING_ALIASES:
        raise ValueError(f"sampling must be one of {sorted(_SAMPLING_ALIASES)}, got {sampling!r}")
    sel = _component_slice(trajectory.nq, component)

    def distance(x: Array, t: float) -> float:
        q_ref, v_ref = reference(t)
        return float(np.sum(np.abs(x[sel] - np.concatenate((q_ref, v_ref))[sel])))

    if _SAMPLING_ALIASES[sampling] == "grid":
        errs = [distance(x, t) for x, t in zip(trajectory.x, trajectory.grid)]
        return float(trapezoid(errs, trajectory.grid))

    taus = np.linspace(0.0, 1.0, samples_per_interval + 1)
    total = 0.0
    for k in range(trajectory.N):
        times = (k + taus) * trajectory.h
        errs = [distance(trajectory.on_interval(k, tau), t) for tau, t in zip(taus, times)]
        total += float(trapezoid(errs, times))
    return total


def expected_order(scheme: CollocationScheme, sampling: str = "grid") -> int:
    """Observed order to expect: classical order on the grid, stage order d+1 densely."""
    if _SAMPLING_ALIASES.get(sampling) == "dense":
        return min(scheme.order, scheme.d + 1)
    return scheme.order


def fit_slope(hs: Sequence[float], errors: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(error) against log(h), ignoring the rounding floor."""
    pts = [(h, e) for h, e in zip(hs, errors) if e > ERROR_FLOOR]
    if len(pts) < 2:
        return None
    slope, _ = np.polyfit(np.log([h for h, _ in pts]), np.log([e for _, e in pts]), 1)
    return float(slope)


@dataclass
class ConvergenceRow:
    """One row of a convergence table.

    Attributes:
        method: SC or PC
        family: Point family value
        d: Collocation order
        N: Number of grid intervals
        h: Step size
        error: Global error
        fitted_slope: Slope fitted over the configuration's whole N list
        expected_order: Order the slope is compared against
    """

    method: Method
    family: str
    d: int
    N: int
    h: float
    error: float
    fitted_slope: Optional[float] = None
    expected_order: Optional[int] = None

    @property
    def config(self) -> Tuple[str, str, int]:
        return self.method.value, self.family, self.d


def convergence_study(
    ivp: IVP,
    reference: Reference,
    configurations: Iterable[Tuple[Union[str, Method], CollocationScheme]],
    N_list: Sequence[int],
    sampling: str = "grid",
    component: str = "both",
    options: Optional[NewtonOptions] = None,
) -> List[ConvergenceRow]:
    """Simulate every configuration for each N and fit the convergence slope.

    Error is measured on the grid by default: the dense error is limited by
    the stage order d+1 of the interval polynomials.
    """
    N_list = [int(n) for n in N_list]
    if len(N_list) < 3:
        logger.warning(f"Convergence study with only {len(N_list)} grid sizes; slopes are unreliable")
    rows: List[ConvergenceRow] = []
    for method, scheme in configurations:
        method = Method.parse(method)
        block: List[ConvergenceRow] = []
        for N in N_list:
            traj = simulate(ivp.with_N(N), method, scheme, options=options)
            err = global_error(traj, reference, sampling=sampling, component=component)
            block.append(ConvergenceRow(method, scheme.family.value, scheme.d, N, traj.h, err))
        slope = fit_slope([r.h for r in block], [r.error for r in block])
        for row in block:
            row.fitted_slope = slope
            row.expected_order = expected_order(scheme, sampling)
        logger.info(f"{method.label} {scheme.label}: slope={slope} (expected {expected_order(scheme, sampling)})")
        rows.extend(block)
    return rows
