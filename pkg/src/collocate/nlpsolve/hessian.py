"""Block-diagonal damped BFGS model of the Lagrangian Hessian."""

import logging
from typing import List, Sequence

import numpy as np
import scipy.sparse

logger = logging.getLogger(__name__)

Array = np.ndarray

_POWELL = 0.2
_TINY_STEP = 1e-14


class BlockBFGS:
    """Partitioned quasi-Newton model: one dense BFGS matrix per variable block.

    Each block is updated from the curvature pair restricted to its
    variables. Pairs with weak curvature are Powell-damped; a block facing
    negative curvature is reset to a scaled identity before the update. The
    first update of a block rescales it by yᵀy / sᵀy. Every block stays
    positive definite, so the KKT matrix of the solver is quasi-definite.

    Example:
        >>> model = BlockBFGS([np.arange(2), np.arange(2, 5)], n_var=5)
        >>> model.update(s, y)
        >>> H = model.matrix()
    """

    def __init__(self, blocks: Sequence[Array], n_var: int):
        blocks = [np.asarray(b, dtype=int) for b in blocks if len(b)]
        covered = np.zeros(n_var, dtype=bool)
        for b in blocks:
            covered[b] = True
        if not covered.all():
            blocks.append(np.flatnonzero(~covered))
        self.n_var = n_var
        self.blocks: List[Array] = blocks
        self.reset()
        rows = [np.repeat(b, b.size) for b in self.blocks]
        cols = [np.tile(b, b.size) for b in self.blocks]
        self._rows = np.concatenate(rows) if rows else np.zeros(0, dtype=int)
        self._cols = np.concatenate(cols) if cols else np.zeros(0, dtype=int)

    def reset(self) -> None:
        self.matrices = [np.eye(b.size) for b in self.blocks]
        self._scaled = [False] * len(self.blocks)
        self.resets = 0
        self.skipped = 0

    def update(self, s: Array, y: Array) -> None:
        for index, block in enumerate(self.blocks):
            self._update_block(index, s[block], y[block])

    def _update_block(self, index: int, s: Array, y: Array) -> None:
        if np.linalg.norm(s) <= _TINY_STEP * max(1.0, np.linalg.norm(y)):
            self.skipped += 1
            return
        B = self.matrices[index]
        sy, yy = float(s @ y), float(y @ y)
        if sy <= 0.0:
            B = np.eye(s.size) * (B.trace() / s.size)
            self.resets += 1
        elif not self._scaled[index]:
            B = np.eye(s.size) * (yy / sy)
            self._scaled[index] = True
        Bs = B @ s
        sBs = float(s @ Bs)
        theta = 1.0 if sy >= _POWELL * sBs else (1.0 - _POWELL) * sBs / (sBs - sy)
        r = theta * y + (1.0 - theta) * Bs
        B = B - np.outer(Bs, Bs) / sBs + np.outer(r, r) / float(s @ r)
        B = 0.5 * (B + B.T)
        try:
            np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            logger.debug(f"Block {index} lost definiteness in rounding; resetting")
            B = np.eye(s.size) * max(abs(B.trace()) / s.size, 1.0)
            self.resets += 1
        self.matrices[index] = B

    def is_positive_definite(self) -> bool:
        """True iff every block admits a Cholesky factor."""
        try:
            for B in self.matrices:
                np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            return False
        return True

    def matrix(self) -> scipy.sparse.csr_matrix:
        values = np.concatenate([B.reshape(-1) for B in self.matrices]) if self.matrices else np.zeros(0)
        return scipy.sparse.coo_matrix((values, (self._rows, self._cols)), shape=(self.n_var, self.n_var)).tocsr()
