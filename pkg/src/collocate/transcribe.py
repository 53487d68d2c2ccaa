"""Direct-collocation NLP assembly.

Decision vector, interleaved per interval:

    [x_0, z_0, u_0, x_1, z_1, u_1, ..., x_{N-1}, z_{N-1}, u_{N-1}, x_N, p]

Constraint rows, equalities first:

    dynamics   x_{k+1} − F(x_k, z_k) = 0                     k = 0..N-1
    stage      G(x_k, z_k, u_k, p) = 0                       k = 0..N-1
    boundary   [x_0 − x_init = 0,] r(x_N, x_0, p) = 0
    path       g(x_k, u_k, p) ≥ 0                            k = 0..N-1

With a fixed initial state the boundary block starts with the pin rows and
r reads x_0 through the pin, r(x_N, x_init, p), which leaves the feasible
set unchanged. Without one, r is evaluated at x_0 itself and its rows read
x_0, x_N and p.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse

from .basis import CollocationScheme, quadrature_weights
from .exceptions import DimensionError, EvaluationError, SchemeError
from .integrator import Method, StageSystem, Trajectory, stage_system
from .model import SecondOrderOCP

logger = logging.getLogger(__name__)

Array = np.ndarray

BLOCKS = ("dynamics", "stage", "boundary", "path")


@dataclass(frozen=True)
class Layout:
    """Offsets of the interleaved decision vector.

    Attributes:
        N: Number of intervals
        nx: State size 2nq
        n_int: Internal values per interval
        nu: Control size
        npar: Parameter size
    """

    N: int
    nx: int
    n_int: int
    nu: int
    npar: int

    @property
    def interval_size(self) -> int:
        return self.nx + self.n_int + self.nu

    @property
    def n_var(self) -> int:
        return self.N * self.interval_size + self.nx + self.npar

    def x_offset(self, k: int) -> int:
        return k * self.interval_size

    def z_offset(self, k: int) -> int:
        return k * self.interval_size + self.nx

    def u_offset(self, k: int) -> int:
        return k * self.interval_size + self.nx + self.n_int

    @property
    def p_offset(self) -> int:
        return self.N * self.interval_size + self.nx

    def x_slice(self, k: int) -> slice:
        return slice(self.x_offset(k), self.x_offset(k) + self.nx)

    def z_slice(self, k: int) -> slice:
        return slice(self.z_offset(k), self.z_offset(k) + self.n_int)

    def u_slice(self, k: int) -> slice:
        return slice(self.u_offset(k), self.u_offset(k) + self.nu)

    @property
    def p_slice(self) -> slice:
        return slice(self.p_offset, self.p_offset + self.npar)

    def columns(self, s: slice) -> Array:
        return np.arange(s.start, s.stop)

    def interval_columns(self, k: int) -> Array:
        """Global columns of the local ordering (x_k, z_k, u_k, x_{k+1}, p)."""
        return np.concatenate(
            [
                self.columns(self.x_slice(k)),
                self.columns(self.z_slice(k)),
                self.columns(self.u_slice(k)),
                self.columns(self.x_slice(k + 1)),
                self.columns(self.p_slice),
            ]
        )

    def unpack(self, w: Array) -> Tuple[Array, Array, Array, Array]:
        """Return (states (N+1, nx), internals (N, n_int), controls (N, nu), p)."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n_var,):
            raise DimensionError(f"Decision vector must have length {self.n_var}, got {w.shape}")
        X = np.stack([w[self.x_slice(k)] for k in range(self.N + 1)])
        Z = np.stack([w[self.z_slice(k)] for k in range(self.N)])
        U = np.stack([w[self.u_slice(k)] for k in range(self.N)])
        return X, Z, U, w[self.p_slice].copy()

    def pack(self, X: Array, Z: Array, U: Array, p: Array) -> Array:
        w = np.zeros(self.n_var)
        for k in range(self.N + 1):
            w[self.x_slice(k)] = X[k]
        for k in range(self.N):
            w[self.z_slice(k)] = Z[k]
            w[self.u_slice(k)] = U[k]
        w[self.p_slice] = np.asarray(p, dtype=float).reshape(-1)
        return w


@dataclass
class BlockCount:
    rows: int = 0
    nnz: int = 0


@dataclass
class StructureCounts:
    """Variables, constraints and Jacobian nonzeros of a transcription.

    Attributes:
        method: SC or PC
        family: Point family value
        d: Collocation order
        n_var: Decision variables
        n_constraints: Equality plus inequality rows
        jacobian_nnz: Structural Jacobian nonzeros
        blocks: Rows and nonzeros per constraint block
        assumption_violated: Model reads velocities in f or L
    """

    method: Method
    family: str
    d: int
    n_var: int
    n_constraints: int
    jacobian_nnz: int
    blocks: Dict[str, BlockCount] = field(default_factory=dict)
    assumption_violated: bool = False

    def to_wire(self) -> Dict[str, object]:
        return {
            "method": self.method.value,
            "family": self.family,
            "d": self.d,
            "n_var": self.n_var,
            "n_constraints": self.n_constraints,
            "jac_nnz": self.jacobian_nnz,
            "blocks": {name: {"rows": b.rows, "nnz": b.nnz} for name, b in self.blocks.items()},
            "assumption_violated": self.assumption_violated,
        }


@dataclass(frozen=True)
class ClosedFormCounts:
    """Closed-form complexity counts for velocity-independent models."""

    n_var: int
    n_constraints: int
    jacobian_nnz: int
    C1: int
    C2: int
    C3: int

    def to_wire(self) -> Dict[str, int]:
        return {
            "n_var": self.n_var,
            "n_constraints": self.n_constraints,
            "jac_nnz": self.jacobian_nnz,
            "C1": self.C1,
            "C2": self.C2,
            "C3": self.C3,
        }


def closed_form_counts(
    method: Union[str, Method],
    N: int,
    d: int,
    nq: int,
    nu: int,
    npar: int,
    nc: int,
    nr: int,
    initial_state_fixed: bool = True,
) -> ClosedFormCounts:
    """Closed-form n_var, constraint and nonzero counts of either transcription.

    With a free initial state the 2nq pin rows are absent and r is counted
    dense in both x_0 and x_N.

    Example:
        >>> closed_form_counts("sc", N=20, d=2, nq=2, nu=1, npar=0, nc=2, nr=8).jacobian_nnz
        1368
    """
    method = Method.parse(method)
    if d < 1:
        raise SchemeError(f"Collocation order must be at least 1, got {d}")
    C1 = N * (2 * nq + nu) + npar + 2 * nq
    pin = 2 * nq if initial_state_fixed else 0
    C2 = pin + nr + N * nc + 2 * N * nq
    boundary = 2 * nq * (pin + nr) if initial_state_fixed else 4 * nq * nr
    C3 = N * nq * d * (nq + nu + npar) + N * nc * (nu + 2 * nq) + boundary
    if method is Method.SC:
        extra, tail = 2 * N * nq * d, N * nq * (2 * d * d + 5 * d + 4)
    else:
        extra, tail = N * nq * d, N * nq * (d * d + 3 * d + 6)
    return ClosedFormCounts(n_var=C1 + extra, n_constraints=C2 + extra, jacobian_nnz=C3 + tail, C1=C1, C2=C2, C3=C3)


@dataclass
class _Block:
    name: str
    interval: Optional[int]
    mask: Array
    row_offset: int
    columns: Array
    start: int = 0

    @property
    def nnz(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class FullEvaluation:
    """Objective, gradient, constraint values and Jacobian entries at one point."""

    objective: float
    gradient: Array
    constraints: Array
    jacobian: Array


class TranscribedNLP:
    """Direct-collocation NLP of an OCP for one method and scheme.

    Implements the problem protocol of `collocate.nlpsolve`: dimensions,
    objective, gradient, constraints, coordinate Jacobian and the variable
    partition used by the block quasi-Newton Hessian.
    """

    def __init__(self, ocp: SecondOrderOCP, method: Union[str, Method], scheme: CollocationScheme):
        self.ocp = ocp
        self.method = Method.parse(method)
        self.scheme = scheme
        self.h = ocp.h
        self.N = int(ocp.N)
        self.system: StageSystem = stage_system(self.method, ocp.ode, scheme, self.h)
        self.layout = Layout(N=self.N, nx=ocp.ode.nx, n_int=self.system.n_int, nu=ocp.nu, npar=ocp.npar)
        self.weights = quadrature_weights(scheme)
        self.x_init = np.asarray(ocp.x_init, dtype=float).reshape(-1)

        nx, n_int, nc = self.layout.nx, self.layout.n_int, ocp.nc
        self.fixed_initial_state = bool(ocp.fix_initial_state)
        self.n_pin = nx if self.fixed_initial_state else 0
        self.n_eq = self.N * (nx + n_int) + self.n_pin + ocp.nr
        self.n_ineq = self.N * nc
        sys_ = self.system
        self._dynamics_jacobian = np.hstack(
            (-sys_.Ex, -sys_.Ez, np.zeros((nx, ocp.nu)), np.eye(nx), np.zeros((nx, ocp.npar)))
        )
        self._blocks = self._build_blocks()
        self.jac_rows = np.concatenate([b.row_offset + np.nonzero(b.mask)[0] for b in self._blocks])
        self.jac_cols = np.concatenate([b.columns[np.nonzero(b.mask)[1]] for b in self._blocks])
        logger.debug(
            f"Transcribed {self.method.label} {scheme.label}: n_var={self.n_var}, "
            f"n_eq={self.n_eq}, n_ineq={self.n_ineq}, nnz={self.jac_rows.size}"
        )

    # -- dimensions ---------------------------------------------------------

    @property
    def n_var(self) -> int:
        return self.layout.n_var

    @property
    def n_constraints(self) -> int:
        return self.n_eq + self.n_ineq

    @property
    def hessian_blocks(self) -> List[Array]:
        """Variable partition: (x_k, z_k, u_k) per interval, then x_N, then p."""
        lay = self.layout
        blocks = [np.arange(lay.x_offset(k), lay.x_offset(k + 1)) for k in range(self.N)]
        blocks.append(np.arange(lay.x_offset(self.N), lay.x_offset(self.N) + lay.nx))
        if lay.npar:
            blocks.append(np.arange(lay.p_offset, lay.p_offset + lay.npar))
        return blocks

    # -- structure ----------------------------------------------------------

    def _build_blocks(self) -> List[_Block]:
        lay, ocp, pat = self.layout, self.ocp, self.system.pattern()
        nx, n_int, nu, npar, nc, nr = lay.nx, lay.n_int, lay.nu, lay.npar, ocp.nc, ocp.nr
        zeros = lambda r, c: np.zeros((r, c), dtype=bool)  # noqa: E731
        p_read = ocp.constraints_read_parameters

        dynamics = np.hstack((pat.end_x, pat.end_z, zeros(nx, nu), np.eye(nx, dtype=bool), zeros(nx, npar)))
        stage = np.hstack((pat.dx, pat.dz, pat.du, zeros(n_int, nx), pat.dp))
        path = np.hstack(
            (
                np.ones((nc, nx), dtype=bool),
                zeros(nc, n_int),
                np.ones((nc, nu), dtype=bool),
                zeros(nc, nx),
                np.full((nc, npar), p_read),
            )
        )

        blocks: List[_Block] = []
        for k in range(self.N):
            blocks.append(_Block("dynamics", k, dynamics, k * nx, lay.interval_columns(k)))
        stage_row = self.N * nx
        for k in range(self.N):
            blocks.append(_Block("stage", k, stage, stage_row + k * n_int, lay.interval_columns(k)))

        boundary_row = self.N * (nx + n_int)
        boundary_cols = np.concatenate(
            (lay.columns(lay.x_slice(0)), lay.columns(lay.x_slice(self.N)), lay.columns(lay.p_slice))
        )
        pin = np.hstack((np.ones((self.n_pin, nx), dtype=bool), zeros(self.n_pin, nx), zeros(self.n_pin, npar)))
        r_reads_x0 = np.full((nr, nx), not self.fixed_initial_state)
        r_rows = np.hstack((r_reads_x0, np.ones((nr, nx), dtype=bool), np.full((nr, npar), p_read)))
        boundary = np.vstack((pin, r_rows))
        blocks.append(_Block("boundary", None, boundary, boundary_row, boundary_cols))

        for k in range(self.N):
            blocks.append(_Block("path", k, path, self.n_eq + k * nc, lay.interval_columns(k)))

        start = 0
        for b in blocks:
            b.start = start
            start += b.nnz
        return blocks

    def block_ranges(self) -> Dict[str, Tuple[int, int]]:
        """Row range [start, stop) of each constraint block."""
        lay = self.layout
        stage_row = self.N * lay.nx
        boundary_row = stage_row + self.N * lay.n_int
        return {
            "dynamics": (0, stage_row),
            "stage": (stage_row, boundary_row),
            "boundary": (boundary_row, self.n_eq),
            "path": (self.n_eq, self.n_constraints),
        }

    def entry_ranges(self) -> Dict[str, Tuple[int, int]]:
        """Range [start, stop) of each block in the jacobian_values array."""
        ranges: Dict[str, Tuple[int, int]] = {}
        for b in self._blocks:
            start, _ = ranges.get(b.name, (b.start, b.start))
            ranges[b.name] = (start, b.start + b.nnz)
        return ranges

    def block_nnz(self) -> Dict[str, int]:
        counts = dict.fromkeys(BLOCKS, 0)
        for b in self._blocks:
            counts[b.name] += b.nnz
        return counts

    # -- evaluation ---------------------------------------------------------

    def _check(self, values: Array, block: str, interval: Optional[int]) -> Array:
        if not np.all(np.isfinite(values)):
            where = f" on interval {interval}" if interval is not None else ""
            raise EvaluationError(f"Non-finite {block} values{where}", block=block, interval=interval)
        return values

    def _parts(self, w: Array) -> Tuple[Array, Array, Array, Array]:
        return self.layout.unpack(w)

    def objective(self, w: Array) -> float:
        X, Z, U, p = self._parts(w)
        ocp, total = self.ocp, 0.0
        for k in range(self.N):
            xi = self.system.stage_states(X[k], Z[k])
            costs = np.array([ocp.stage_cost(xi[i], U[k], p) for i in range(self.scheme.d)])
            total += self.h * float(self.weights @ self._check(costs, "objective", k))
        terminal = float(ocp.terminal_cost(X[self.N]))
        if not np.isfinite(terminal):
            raise EvaluationError("Non-finite terminal cost", block="objective", interval=self.N)
        return total + terminal

    def gradient(self, w: Array) -> Array:
        X, Z, U, p = self._parts(w)
        lay, ocp, d, nx = self.layout, self.ocp, self.scheme.d, self.layout.nx
        grad = np.zeros(self.n_var)
        for k in range(self.N):
            xi = self.system.stage_states(X[k], Z[k])
            g_xi = np.zeros(d * nx)
            for i in range(d):
                Lx, Lu, Lp = ocp.stage_cost_grad(xi[i], U[k], p)
                weight = self.h * self.weights[i]
                g_xi[i * nx : (i + 1) * nx] = weight * np.asarray(Lx, dtype=float).reshape(-1)
                grad[lay.u_slice(k)] += weight * np.asarray(Lu, dtype=float).reshape(-1)
                grad[lay.p_slice] += weight * np.asarray(Lp, dtype=float).reshape(-1)
            grad[lay.x_slice(k)] += self.system.Sx.T @ g_xi
            grad[lay.z_slice(k)] += self.system.Sz.T @ g_xi
        grad[lay.x_slice(self.N)] += np.asarray(ocp.terminal_cost_grad(X[self.N]), dtype=float).reshape(-1)
        return self._check(grad, "objective", None)

    def constraints(self, w: Array) -> Array:
        """Equality rows (dynamics, stage, boundary) followed by path rows."""
        X, Z, U, p = self._parts(w)
        ocp, sys_ = self.ocp, self.system
        dyn, stage, path = [], [], []
        for k in range(self.N):
            t_k = k * self.h
            dyn.append(self._check(X[k + 1] - sys_.end_state(X[k], Z[k]), "dynamics", k))
            stage.append(self._check(sys_.residual(X[k], Z[k], U[k], p, t_k), "stage", k))
            if ocp.nc:
                g = np.asarray(ocp.path_constraint(X[k], U[k], p), dtype=float).reshape(-1)
                path.append(self._check(g, "path", k))
        r = np.asarray(ocp.boundary(X[self.N], self._boundary_x0(X), p), dtype=float).reshape(-1)
        pin = X[0] - self.x_init if self.fixed_initial_state else np.zeros(0)
        boundary = self._check(np.concatenate((pin, r)), "boundary", None)
        return np.concatenate(dyn + stage + [boundary] + path)

    def _boundary_x0(self, X: Array) -> Array:
        return self.x_init if self.fixed_initial_state else X[0]

    def _local_jacobian(self, block: _Block, X, Z, U, p) -> Array:
        lay, ocp, sys_ = self.layout, self.ocp, self.system
        nx, nu = lay.nx, lay.nu
        k = block.interval
        if block.name == "dynamics":
            return self._dynamics_jacobian
        if block.name == "stage":
            jac = sys_.jacobian(X[k], Z[k], U[k], p, k * self.h)
            return np.hstack((jac.dx, jac.dz, jac.du, np.zeros((lay.n_int, nx)), jac.dp))
        if block.name == "path":
            gx, gu, gp = ocp.path_constraint_jac(X[k], U[k], p)
            return np.hstack(
                (
                    np.asarray(gx, dtype=float).reshape(ocp.nc, nx),
                    np.zeros((ocp.nc, lay.n_int)),
                    np.asarray(gu, dtype=float).reshape(ocp.nc, nu),
                    np.zeros((ocp.nc, nx)),
                    np.asarray(gp, dtype=float).reshape(ocp.nc, lay.npar),
                )
            )
        rT, r0, rp = ocp.boundary_jac(X[self.N], self._boundary_x0(X), p)
        if self.fixed_initial_state:
            top = np.hstack((np.eye(nx), np.zeros((nx, nx)), np.zeros((nx, lay.npar))))
            r0 = np.zeros((ocp.nr, nx))
        else:
            top = np.zeros((0, 2 * nx + lay.npar))
        bottom = np.hstack(
            (
                np.asarray(r0, dtype=float).reshape(ocp.nr, nx),
                np.asarray(rT, dtype=float).reshape(ocp.nr, nx),
                np.asarray(rp, dtype=float).reshape(ocp.nr, lay.npar),
            )
        )
        return np.vstack((top, bottom))

    def jacobian_values(self, w: Array) -> Array:
        """Jacobian entries aligned with (jac_rows, jac_cols)."""
        X, Z, U, p = self._parts(w)
        values = np.empty(self.jac_rows.size)
        for block in self._blocks:
            local = self._local_jacobian(block, X, Z, U, p)
            values[block.start : block.start + block.nnz] = self._check(local[block.mask], block.name, block.interval)
        return values

    def jacobian(self, w: Array) -> scipy.sparse.csr_matrix:
        shape = (self.n_constraints, self.n_var)
        return scipy.sparse.coo_matrix((self.jacobian_values(w), (self.jac_rows, self.jac_cols)), shape=shape).tocsr()

    def undeclared_entries(self, w: Array) -> Array:
        """Dense local Jacobian entries outside the declared pattern (should be zero)."""
        X, Z, U, p = self._parts(w)
        leaks = [self._local_jacobian(b, X, Z, U, p)[~b.mask] for b in self._blocks]
        return np.concatenate(leaks)


def transcribe(ocp: SecondOrderOCP, method: Union[str, Method], scheme: CollocationScheme) -> TranscribedNLP:
    """Build the direct-collocation NLP of an OCP."""
    if int(ocp.N) < 1:
        raise DimensionError(f"Need at least one grid interval, got N={ocp.N}")
    return TranscribedNLP(ocp, method, scheme)


def structure_counts(nlp: TranscribedNLP) -> StructureCounts:
    """Count variables, rows and structural nonzeros, per block and in total."""
    ranges, nnz = nlp.block_ranges(), nlp.block_nnz()
    blocks = {name: BlockCount(rows=ranges[name][1] - ranges[name][0], nnz=nnz[name]) for name in BLOCKS}
    violated = bool(nlp.ocp.ode.velocity_dependent or nlp.ocp.stage_cost_velocity_dependent)
    if violated:
        logger.warning("Structure counted for a velocity-dependent model; closed forms do not apply")
    return StructureCounts(
        method=nlp.method,
        family=nlp.scheme.family.value,
        d=nlp.scheme.d,
        n_var=nlp.n_var,
        n_constraints=sum(b.rows for b in blocks.values()),
        jacobian_nnz=sum(b.nnz for b in blocks.values()),
        blocks=blocks,
        assumption_violated=violated,
    )


def closed_form_counts_for(nlp: TranscribedNLP) -> ClosedFormCounts:
    ocp = nlp.ocp
    return closed_form_counts(
        nlp.method,
        nlp.N,
        nlp.scheme.d,
        ocp.nq,
        ocp.nu,
        ocp.npar,
        ocp.nc,
        ocp.nr,
        initial_state_fixed=nlp.fixed_initial_state,
    )


def initial_guess(nlp: TranscribedNLP, ocp: Optional[SecondOrderOCP] = None) -> Array:
    """Linear position homotopy from x_init to x_final, zero controls, nominal p.

    Velocities are the interpolant's slope and the internals sample the same
    interpolant, so the guess satisfies the stage equations of q̈ = 0. With no
    x_final the positions stay at the initial ones.
    """
    ocp = ocp or nlp.ocp
    nq, lay, T = ocp.nq, nlp.layout, ocp.T
    q0 = np.asarray(ocp.x_init, dtype=float)[:nq]
    qT = q0 if ocp.x_final is None else np.asarray(ocp.x_final, dtype=float)[:nq]
    slope = (qT - q0) / T

    def state(t: float) -> Array:
        return np.concatenate((q0 + t * slope, slope))

    X = np.stack([state(k * nlp.h) for k in range(nlp.N + 1)])
    stages = [[state((k + tau) * nlp.h) for tau in nlp.scheme.points] for k in range(nlp.N)]
    if nlp.method is Method.SC:
        Z = np.stack([np.concatenate(s) for s in stages])
    else:
        Z = np.stack([np.concatenate([x[:nq] for x in s]) for s in stages])
    U = np.zeros((nlp.N, lay.nu))
    return lay.pack(X, Z, U, ocp.p_nominal)


def embed_trajectory(nlp: TranscribedNLP, trajectory: Trajectory, p: Optional[Array] = None) -> Array:
    """Decision vector holding an integrator trajectory and its controls."""
    if trajectory.method is not nlp.method or trajectory.scheme != nlp.scheme or trajectory.N != nlp.N:
        raise DimensionError("Trajectory was simulated with a different method, scheme or grid")
    p = trajectory.p if p is None else p
    return nlp.layout.pack(trajectory.x, trajectory.z, trajectory.controls, np.zeros(0) if p is None else p)


def unpack(nlp: TranscribedNLP, w: Array) -> Tuple[Array, Array, Array, Array]:
    return nlp.layout.unpack(w)


def eval_full(nlp: TranscribedNLP, w: Array) -> FullEvaluation:
    """Evaluate objective, gradient, constraints and Jacobian entries.

    Raises:
        DimensionError: w has the wrong length
        EvaluationError: a model callable returned non-finite values
    """
    w = np.asarray(w, dtype=float)
    return FullEvaluation(
        objective=nlp.objective(w),
        gradient=nlp.gradient(w),
        constraints=nlp.constraints(w),
        jacobian=nlp.jacobian_values(w),
    )
