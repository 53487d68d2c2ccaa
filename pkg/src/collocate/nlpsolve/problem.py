"""Problem protocol consumed by the solver, plus a dense helper for small NLPs."""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, runtime_checkable

import numpy as np

Array = np.ndarray


@runtime_checkable
class NLPProblem(Protocol):
    """min f(w) s.t. c_E(w) = 0, c_I(w) ≥ 0.

    Constraint rows are ordered equalities first (n_eq rows) then
    inequalities (n_ineq rows). The Jacobian is given in coordinate form:
    `jacobian_values(w)[i]` is the entry at (jac_rows[i], jac_cols[i]).
    """

    n_var: int
    n_eq: int
    n_ineq: int
    jac_rows: Array
    jac_cols: Array

    @property
    def hessian_blocks(self) -> List[Array]: ...

    def objective(self, w: Array) -> float: ...

    def gradient(self, w: Array) -> Array: ...

    def constraints(self, w: Array) -> Array: ...

    def jacobian_values(self, w: Array) -> Array: ...


@dataclass
class DenseNLP:
    """Small NLP given by plain callables with a dense constraint Jacobian.

    Attributes:
        n_var: Number of variables
        objective: f(w)
        gradient: ∇f(w)
        constraints: (c_E(w), c_I(w)) stacked, equalities first
        jacobian: Dense (n_eq + n_ineq, n_var) Jacobian
        n_eq: Equality rows
        n_ineq: Inequality rows
        blocks: Optional variable partition for the quasi-Newton model

    Example:
        >>> nlp = DenseNLP(2, lambda w: w @ w, lambda w: 2 * w)
    """

    n_var: int
    objective: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    constraints: Callable[[Array], Array] = field(default=None)
    jacobian: Callable[[Array], Array] = field(default=None)
    n_eq: int = 0
    n_ineq: int = 0
    blocks: Optional[List[Array]] = None

    def __post_init__(self):
        m = self.n_eq + self.n_ineq
        if self.constraints is None:
            self.constraints = lambda w: np.zeros(0)
            self.jacobian = lambda w: np.zeros((0, self.n_var))
        rows, cols = np.indices((m, self.n_var))
        self.jac_rows = rows.reshape(-1)
        self.jac_cols = cols.reshape(-1)

    @property
    def hessian_blocks(self) -> List[Array]:
        return self.blocks or [np.arange(self.n_var)]

    def jacobian_values(self, w: Array) -> Array:
        return np.asarray(self.jacobian(w), dtype=float).reshape(-1)
