"""Primal-dual interior-point method with a quasi-Newton Hessian.

Inequalities become c_I(w) − s = 0 with s > 0 under a log barrier. Each
iteration solves the regularized KKT system

    [ H + δ_w I    J_Eᵀ      J_Iᵀ          ] [  Δw   ]   [ −r_d                          ]
    [ J_E         −δ_c I     0             ] [ −Δy_E ] = [ −c_E                          ]
    [ J_I          0        −(Σ⁻¹ + δ_c I) ] [ −Δy_I ]   [ −(c_I − s) − Σ⁻¹(y_I − μ/s)  ]

with Σ = Z/S by sparse LU, then runs a backtracking Armijo search on the
ℓ1 barrier merit function.
"""

import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..exceptions import FactorizationError
from .hessian import BlockBFGS
from .options import SolveOptions
from .problem import NLPProblem
from .report import IterationRecord, SolveReport, SolveStatus

logger = logging.getLogger(__name__)

Array = np.ndarray

_MIN_STEP = 1e-12
_EPS = np.finfo(float).eps


@dataclass
class _Iterate:
    w: Array
    s: Array
    y_eq: Array
    y_ineq: Array
    z: Array


@dataclass
class _Evaluation:
    f: float
    c_eq: Array
    c_ineq: Array
    grad: Optional[Array] = None
    J: Optional[scipy.sparse.csr_matrix] = None


class InteriorPointSolver:
    """Stateful solver for one NLP; `solve` drives the iteration."""

    def __init__(self, nlp: NLPProblem, options: Optional[SolveOptions] = None):
        self.nlp = nlp
        self.options = options or SolveOptions()
        self.n, self.m_eq, self.m_ineq = int(nlp.n_var), int(nlp.n_eq), int(nlp.n_ineq)
        self.m = self.m_eq + self.m_ineq
        self.rows = np.asarray(nlp.jac_rows, dtype=int)
        self.cols = np.asarray(nlp.jac_cols, dtype=int)
        self.hessian = BlockBFGS(nlp.hessian_blocks, self.n)
        self.nu = 0.0
        self._work = 0.0

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, w: Array, derivatives: bool = True) -> _Evaluation:
        """Objective and constraints at w, plus gradient and Jacobian when asked."""
        c = np.asarray(self.nlp.constraints(w), dtype=float)
        ev = _Evaluation(f=float(self.nlp.objective(w)), c_eq=c[: self.m_eq], c_ineq=c[self.m_eq :])
        return self.differentiate(ev, w) if derivatives else ev

    def differentiate(self, ev: _Evaluation, w: Array) -> _Evaluation:
        start = time.perf_counter()
        ev.grad = np.asarray(self.nlp.gradient(w), dtype=float)
        ev.J = scipy.sparse.coo_matrix(
            (self.nlp.jacobian_values(w), (self.rows, self.cols)), shape=(self.m, self.n)
        ).tocsr()
        self._work += time.perf_counter() - start
        return ev

    def lagrangian_gradient(self, ev: _Evaluation, y_eq: Array, y_ineq: Array) -> Array:
        return ev.grad - ev.J.T @ np.concatenate((y_eq, y_ineq))

    def residuals(self, it: _Iterate, ev: _Evaluation, mu: float) -> Tuple[float, float, float]:
        """(stationarity, primal infeasibility, complementarity) for barrier μ."""
        stat = np.max(np.abs(self.lagrangian_gradient(ev, it.y_eq, it.y_ineq)), initial=0.0)
        stat = max(stat, np.max(np.abs(it.y_ineq - it.z), initial=0.0))
        feas = max(np.max(np.abs(ev.c_eq), initial=0.0), np.max(np.abs(ev.c_ineq - it.s), initial=0.0))
        comp = np.max(np.abs(it.s * it.z - mu), initial=0.0)
        return float(stat), float(feas), float(comp)

    def merit(self, ev: _Evaluation, s: Array, mu: float) -> float:
        return ev.f - mu * float(np.sum(np.log(s))) + self.nu * self.infeasibility(ev, s)

    @staticmethod
    def infeasibility(ev: _Evaluation, s: Array) -> float:
        return float(np.sum(np.abs(ev.c_eq)) + np.sum(np.abs(ev.c_ineq - s)))

    # -- linear algebra -----------------------------------------------------

    def kkt_matrix(self, H: scipy.sparse.csr_matrix, J: scipy.sparse.csr_matrix, sigma: Array, delta_w: float):
        opts, n = self.options, self.n
        Hc, Jc = H.tocoo(), J.tocoo()
        diag = np.concatenate(
            (
                np.full(n, delta_w),
                np.full(self.m_eq, -opts.delta_c),
                -(1.0 / sigma + opts.delta_c),
            )
        )
        idx = np.arange(n + self.m)
        rows = np.concatenate((Hc.row, n + Jc.row, Jc.col, idx))
        cols = np.concatenate((Hc.col, Jc.col, n + Jc.row, idx))
        vals = np.concatenate((Hc.data, Jc.data, Jc.data, diag))
        return scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n + self.m, n + self.m)).tocsc()

    def factorize(self, H, J, sigma):
        """LU of the KKT matrix, raising the primal regularization on failure."""
        opts = self.options
        delta_w = 0.0
        for attempt in range(opts.max_regularizations + 1):
            try:
                lu = scipy.sparse.linalg.splu(self.kkt_matrix(H, J, sigma, delta_w))
                return lu, delta_w
            except RuntimeError as e:
                logger.debug(f"KKT factorization failed with delta_w={delta_w:.1e}: {e}")
                delta_w = opts.delta0 if delta_w == 0.0 else 10.0 * delta_w
        raise FactorizationError(f"KKT factorization failed after {opts.max_regularizations} regularizations")

    @staticmethod
    def _solve(lu, rhs: Array) -> Array:
        sol = lu.solve(rhs)
        if not np.all(np.isfinite(sol)):
            raise FactorizationError("Non-finite KKT solution")
        return sol

    # -- step control -------------------------------------------------------

    def fraction_to_boundary(self, x: Array, dx: Array) -> float:
        tau = self.options.tau_ftb
        neg = dx < 0.0
        if not np.any(neg):
            return 1.0
        return float(min(1.0, np.min(-tau * x[neg] / dx[neg])))

    def safeguard_duals(self, z: Array, s: Array, mu: float) -> Array:
        kappa = self.options.kappa_sigma
        return np.clip(z, mu / (kappa * s), kappa * mu / s)

    # -- main loop ----------------------------------------------------------

    def solve(self, guess: Array) -> SolveReport:
        opts = self.options
        w = np.asarray(guess, dtype=float).copy()
        if w.shape != (self.n,):
            raise ValueError(f"Initial guess must have length {self.n}, got {w.shape}")

        mu = opts.mu0
        ev = self.evaluate(w)
        s = np.maximum(ev.c_ineq, 1e-2)
        it = _Iterate(w=w, s=s, y_eq=np.zeros(self.m_eq), y_ineq=np.zeros(self.m_ineq), z=mu / s)

        history: List[IterationRecord] = []
        times: List[float] = []
        work: List[float] = []

        def lap(start: float) -> None:
            times.append(time.perf_counter() - start)
            work.append(self._work)

        status, message = SolveStatus.MAX_ITER, None
        hessian_fresh = True
        iteration = 0

        while True:
            stat, feas, comp = self.residuals(it, ev, 0.0)
            if max(stat, feas, comp) <= opts.kkt_tol:
                status = SolveStatus.OPTIMAL
                break
            if iteration >= opts.max_iter:
                message = f"Reached max_iter={opts.max_iter}"
                break

            start, self._work = time.perf_counter(), 0.0
            while mu > opts.kkt_tol / 10.0 and max(self.residuals(it, ev, mu)) <= 10.0 * mu:
                mu = max(opts.kkt_tol / 10.0, opts.mu_shrink * mu)
                it.z = self.safeguard_duals(it.z, it.s, mu)

            try:
                step = self._iterate(it, ev, mu)
            except FactorizationError as e:
                lap(start)
                status, message = SolveStatus.LINE_SEARCH_FAILURE, str(e)
                break

            if step is None:
                if not hessian_fresh:
                    logger.debug("Line search failed; resetting quasi-Newton model")
                    self.hessian.reset()
                    hessian_fresh = True
                    lap(start)
                    iteration += 1
                    continue
                lap(start)
                status, message = SolveStatus.LINE_SEARCH_FAILURE, "Line search could not reduce the merit function"
                break

            new_it, new_ev, alpha, merit = step
            grad_old = self.lagrangian_gradient(ev, new_it.y_eq, new_it.y_ineq)
            grad_new = self.lagrangian_gradient(new_ev, new_it.y_eq, new_it.y_ineq)
            self.hessian.update(new_it.w - it.w, grad_new - grad_old)
            hessian_fresh = False
            it, ev = new_it, new_ev
            iteration += 1
            lap(start)

            kkt = max(self.residuals(it, ev, 0.0))
            history.append(IterationRecord(iteration, mu, merit, kkt, alpha))
            logger.debug(f"iter {iteration:4d}  mu={mu:.2e}  merit={merit:.6e}  kkt={kkt:.2e}  alpha={alpha:.2e}")

        stat, _, comp = self.residuals(it, ev, 0.0)
        feas = max(
            np.max(np.abs(ev.c_eq), initial=0.0),
            np.max(np.maximum(0.0, -ev.c_ineq), initial=0.0),
            np.max(np.abs(ev.c_ineq - it.s), initial=0.0),
        )
        report = SolveReport(
            status=status,
            objective=ev.f,
            iterations=iteration,
            stationarity=stat,
            primal_feasibility=float(feas),
            complementarity=comp,
            mean_iteration_time=float(np.mean(work)) if work else 0.0,
            solution=it.w,
            multipliers_eq=it.y_eq,
            multipliers_ineq=it.y_ineq,
            message=message,
            history=history,
            mean_wall_time=float(np.mean(times)) if times else 0.0,
        )
        logger.debug(f"Solve finished: {status.value} after {iteration} iterations, f={ev.f:.10e}")
        return report

    def _iterate(self, it: _Iterate, ev: _Evaluation, mu: float):
        """Compute a search direction and line-search it; None when the search fails."""
        opts, n, m_eq = self.options, self.n, self.m_eq
        start = time.perf_counter()
        H = self.hessian.matrix()
        sigma = it.z / it.s
        lu, _ = self.factorize(H, ev.J, sigma)

        r_d = self.lagrangian_gradient(ev, it.y_eq, it.y_ineq)
        r_ineq = ev.c_ineq - it.s
        rhs = np.concatenate((-r_d, -ev.c_eq, -r_ineq - (it.y_ineq - mu / it.s) / sigma))
        sol = self._solve(lu, rhs)
        self._work += time.perf_counter() - start
        dw = sol[:n]
        dy_eq, dy_ineq = -sol[n : n + m_eq], -sol[n + m_eq :]
        ds = (mu / it.s - it.y_ineq - dy_ineq) / sigma
        dz = mu / it.s - it.z - sigma * ds

        # penalty large enough for a descent direction of the merit function
        theta = self.infeasibility(ev, it.s)
        barrier_slope = float(ev.grad @ dw) - mu * float(np.sum(ds / it.s))
        curvature = 0.5 * (float(dw @ (H @ dw)) + float(ds @ (sigma * ds)))
        if theta > 0.0:
            needed = (barrier_slope + max(curvature, 0.0)) / ((1.0 - opts.merit_rho) * theta)
            if needed > self.nu:
                self.nu = needed + 1e-8
        slope = barrier_slope - self.nu * theta

        alpha_p = self.fraction_to_boundary(it.s, ds) if self.m_ineq else 1.0
        alpha_z = self.fraction_to_boundary(it.z, dz) if self.m_ineq else 1.0
        phi0 = self.merit(ev, it.s, mu)
        tolerance = 10.0 * _EPS * abs(phi0)

        def accept(phi: float, alpha: float) -> bool:
            return np.isfinite(phi) and phi <= phi0 + opts.armijo * alpha * min(slope, 0.0) + tolerance

        def make(w: Array, s: Array, alpha: float) -> _Iterate:
            z = self.safeguard_duals(it.z + alpha_z * dz, s, mu) if self.m_ineq else it.z
            return _Iterate(w=w, s=s, y_eq=it.y_eq + alpha * dy_eq, y_ineq=it.y_ineq + alpha * dy_ineq, z=z)

        alpha, first = alpha_p, True
        while alpha >= _MIN_STEP:
            w_t, s_t = it.w + alpha * dw, it.s + alpha * ds
            ev_t = self._try_evaluate(w_t)
            if ev_t is not None:
                phi = self.merit(ev_t, s_t, mu)
                if accept(phi, alpha):
                    return make(w_t, s_t, alpha), self.differentiate(ev_t, w_t), alpha, phi
                if first and opts.second_order_correction:
                    corrected = self._second_order_correction(lu, it, ev_t, w_t, s_t, sigma)
                    if corrected is not None:
                        w_c, s_c, ev_c = corrected
                        phi_c = self.merit(ev_c, s_c, mu)
                        if accept(phi_c, alpha):
                            return make(w_c, s_c, alpha), self.differentiate(ev_c, w_c), alpha, phi_c
            first = False
            alpha *= 0.5
        return None

    def _try_evaluate(self, w: Array) -> Optional[_Evaluation]:
        try:
            ev = self.evaluate(w, derivatives=False)
        except (ArithmeticError, ValueError) as e:
            logger.debug(f"Trial point rejected: {e}")
            return None
        if not (np.isfinite(ev.f) and np.all(np.isfinite(ev.c_eq)) and np.all(np.isfinite(ev.c_ineq))):
            return None
        return ev

    def _second_order_correction(self, lu, it: _Iterate, ev_t: _Evaluation, w_t: Array, s_t: Array, sigma: Array):
        n, m_eq = self.n, self.m_eq
        rhs = np.concatenate((np.zeros(n), -ev_t.c_eq, -(ev_t.c_ineq - s_t)))
        try:
            sol = self._solve(lu, rhs)
        except FactorizationError:
            return None
        s_c = s_t + sol[n + m_eq :] / sigma
        if np.any(s_c < (1.0 - self.options.tau_ftb) * it.s):
            return None
        w_c = w_t + sol[:n]
        ev_c = self._try_evaluate(w_c)
        if ev_c is None:
            return None
        return w_c, s_c, ev_c


def solve(nlp: NLPProblem, guess: Array, options: Optional[SolveOptions] = None) -> SolveReport:
    """Solve min f s.t. c_E = 0, c_I ≥ 0 from an initial guess.

    Numerical trouble never raises: the report carries status
    line_search_failure with a diagnostic message instead.

    Example:
        >>> report = solve(nlp, initial_guess(nlp))
        >>> report.status
        <SolveStatus.OPTIMAL: 'optimal'>
    """
    return InteriorPointSolver(nlp, options).solve(guess)
