"""Collocation points and the polynomial bases built on them.

Two bases live over the master interval τ ∈ [0, 1] with the auxiliary node
τ_0 = 0 in front of the collocation points τ_1..τ_d:

    LagrangeBasis       p_0..p_d, degree ≤ d, used by standard collocation (SC)
    SemiHermiteBasis    p*_0..p*_d and p*_v, degree ≤ d+1, used by
                        position-based collocation (PC)

Both are stored as monomial coefficient tables (ascending powers) obtained by
solving their interpolation conditions, and evaluated with Horner's rule.

Usage:
    from collocate.basis import CollocationScheme, semi_hermite_basis

    scheme = CollocationScheme.create("radau", 2)
    basis = semi_hermite_basis(scheme)
    basis.values(1.0, order=1)
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as P

from .exceptions import SchemeError

logger = logging.getLogger(__name__)

#: Auxiliary interpolation node; never a collocation point.
TAU0 = 0.0

#: Largest supported collocation order.
MAX_ORDER = 10

_ROOT_TOL = 1e-14


class Family(str, Enum):
    """Collocation point family."""

    GAUSS_LEGENDRE = "gauss"
    RADAU_IIA = "radau"

    @classmethod
    def parse(cls, value: Union[str, "Family"]) -> "Family":
        """Accept a Family or one of its common spellings."""
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "gauss": cls.GAUSS_LEGENDRE,
            "gausslegendre": cls.GAUSS_LEGENDRE,
            "legendre": cls.GAUSS_LEGENDRE,
            "gl": cls.GAUSS_LEGENDRE,
            "lg": cls.GAUSS_LEGENDRE,
            "radau": cls.RADAU_IIA,
            "radauiia": cls.RADAU_IIA,
            "r": cls.RADAU_IIA,
        }
        if key not in aliases:
            raise SchemeError(f"Unknown collocation family: {value!r}")
        return aliases[key]

    @property
    def label(self) -> str:
        return "GL" if self is Family.GAUSS_LEGENDRE else "R"


def _tabulated(family: Family, d: int) -> Tuple[float, ...]:
    """Closed-form or tabulated points for d ≤ 5, used as a cross-check."""
    if family is Family.GAUSS_LEGENDRE:
        half = {
            1: [0.0],
            2: [-np.sqrt(1.0 / 3.0), np.sqrt(1.0 / 3.0)],
            3: [-np.sqrt(0.6), 0.0, np.sqrt(0.6)],
            4: [
                -np.sqrt(3.0 / 7.0 + 2.0 / 7.0 * np.sqrt(1.2)),
                -np.sqrt(3.0 / 7.0 - 2.0 / 7.0 * np.sqrt(1.2)),
                np.sqrt(3.0 / 7.0 - 2.0 / 7.0 * np.sqrt(1.2)),
                np.sqrt(3.0 / 7.0 + 2.0 / 7.0 * np.sqrt(1.2)),
            ],
            5: [
                -np.sqrt(5.0 + 2.0 * np.sqrt(10.0 / 7.0)) / 3.0,
                -np.sqrt(5.0 - 2.0 * np.sqrt(10.0 / 7.0)) / 3.0,
                0.0,
                np.sqrt(5.0 - 2.0 * np.sqrt(10.0 / 7.0)) / 3.0,
                np.sqrt(5.0 + 2.0 * np.sqrt(10.0 / 7.0)) / 3.0,
            ],
        }[d]
        return tuple(0.5 * (1.0 + x) for x in half)
    return {
        1: (1.0,),
        2: (1.0 / 3.0, 1.0),
        3: ((4.0 - np.sqrt(6.0)) / 10.0, (4.0 + np.sqrt(6.0)) / 10.0, 1.0),
        4: (0.0885879595127039, 0.4094668644407347, 0.7876594617608471, 1.0),
        5: (0.05710419611451768, 0.2768430136381238, 0.5835904323689168, 0.8602401356562195, 1.0),
    }[d]


def defining_polynomial(family: Family, d: int) -> np.ndarray:
    """Legendre-series coefficients (on x = 2τ − 1) whose roots are the points.

    Gauss-Legendre: P_d. Radau IIA: P_d − P_{d−1}, which vanishes at x = 1.
    """
    c = np.zeros(d + 1)
    c[d] = 1.0
    if family is Family.RADAU_IIA:
        c[d - 1] = -1.0
    return c


def _polish(c: np.ndarray, x: np.ndarray) -> np.ndarray:
    dc = legendre.legder(c)
    for _ in range(20):
        step = legendre.legval(x, c) / legendre.legval(x, dc)
        x = x - step
        if np.max(np.abs(step)) < _ROOT_TOL:
            break
    return x


def collocation_points(family: Union[str, Family], d: int) -> np.ndarray:
    """Return τ_1..τ_d in (0, 1] for the given family and order.

    Roots come from numpy's Legendre machinery, are polished by Newton on the
    defining polynomial and, for d ≤ 5, compared against closed forms.

    Raises:
        SchemeError: d outside 1..MAX_ORDER, or a root check failed
    """
    family = Family.parse(family)
    if not isinstance(d, (int, np.integer)) or d < 1 or d > MAX_ORDER:
        raise SchemeError(f"Collocation order must be an integer in 1..{MAX_ORDER}, got {d!r}")
    d = int(d)

    c = defining_polynomial(family, d)
    if family is Family.GAUSS_LEGENDRE:
        x, _ = legendre.leggauss(d)
        x = _polish(c, np.sort(x))
    else:
        roots = np.sort(np.real(legendre.legroots(c)))
        interior = _polish(c, roots[:-1]) if d > 1 else np.empty(0)
        x = np.append(interior, 1.0)

    tau = 0.5 * (1.0 + x)
    if family is Family.RADAU_IIA:
        tau[-1] = 1.0
    else:
        # enforce exact symmetry about 1/2
        tau = 0.5 * (tau + (1.0 - tau[::-1]))

    if d <= 5:
        deviation = np.max(np.abs(tau - np.asarray(_tabulated(family, d))))
        if deviation > 1e-12:
            raise SchemeError(f"{family.value} points of order {d} deviate from table by {deviation:.2e}")
    logger.debug(f"Collocation points {family.value} d={d}: {tau}")
    return tau


@dataclass(frozen=True)
class CollocationScheme:
    """Collocation order, point family and points.

    Attributes:
        d: Collocation order (number of collocation points)
        family: Point family
        tau: Collocation points τ_1..τ_d, strictly increasing in (0, 1]

    Example:
        >>> scheme = CollocationScheme.create("gauss", 2)
        >>> scheme.order
        4
    """

    d: int
    family: Family
    tau: Tuple[float, ...]

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if len(tau) != self.d or self.d < 1:
            raise SchemeError(f"Expected {self.d} collocation points, got {len(tau)}")
        if np.any(tau <= 0.0) or np.any(tau > 1.0):
            raise SchemeError("Collocation points must lie in (0, 1]")
        if np.any(np.diff(tau) <= 0.0):
            raise SchemeError("Collocation points must be strictly increasing")
        if self.family is Family.RADAU_IIA and tau[-1] != 1.0:
            raise SchemeError("Radau IIA points must end at 1")
        if self.family is Family.GAUSS_LEGENDRE and np.max(np.abs(tau + tau[::-1] - 1.0)) > 1e-12:
            raise SchemeError("Gauss-Legendre points must be symmetric about 1/2")

    @classmethod
    def create(cls, family: Union[str, Family], d: int) -> "CollocationScheme":
        family = Family.parse(family)
        return cls(d=int(d), family=family, tau=tuple(float(t) for t in collocation_points(family, d)))

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.tau)

    @property
    def nodes(self) -> np.ndarray:
        """Interpolation nodes τ_0 = 0, τ_1, ..., τ_d."""
        return np.concatenate(([TAU0], self.tau))

    @property
    def order(self) -> int:
        """Classical (superconvergent) order at grid points."""
        return 2 * self.d if self.family is Family.GAUSS_LEGENDRE else 2 * self.d - 1

    @property
    def label(self) -> str:
        return f"{self.family.label}-{self.d}"


def eval_poly(coeffs: Sequence[float], tau, derivative_order: int = 0):
    """Evaluate a monomial-coefficient polynomial or one of its derivatives.

    Coefficients are in ascending powers. Horner's rule via numpy.

    Example:
        >>> eval_poly([0.0, 0.0, 1.0], 0.5, 1)
        1.0
    """
    if derivative_order not in (0, 1, 2):
        raise ValueError(f"derivative_order must be 0, 1 or 2, got {derivative_order}")
    c = np.asarray(coeffs, dtype=float)
    if derivative_order:
        c = P.polyder(c, derivative_order)
    return P.polyval(tau, c)


@dataclass(frozen=True, eq=False)
class _PolynomialTable:
    scheme: CollocationScheme
    coeffs: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def value(self, index: int, tau, order: int = 0):
        return eval_poly(self.coeffs[index], tau, order)

    def values(self, tau: float, order: int = 0) -> np.ndarray:
        """Every basis polynomial (or derivative) evaluated at a single τ."""
        c = self.coeffs if order == 0 else P.polyder(self.coeffs, order, axis=1)
        return P.polyval(float(tau), c.T)

    def matrix(self, taus: Sequence[float], order: int = 0) -> np.ndarray:
        """Rows are points, columns are basis polynomials."""
        return np.stack([self.values(t, order) for t in taus])


@dataclass(frozen=True, eq=False)
class LagrangeBasis(_PolynomialTable):
    """Lagrange polynomials p_0..p_d over {0, τ_1, ..., τ_d}.

    Attributes:
        scheme: The collocation scheme
        coeffs: (d+1, d+1) table; row i holds p_i in ascending powers
    """


@dataclass(frozen=True, eq=False)
class SemiHermiteBasis(_PolynomialTable):
    """Semi-Hermite polynomials p*_0..p*_d, p*_v of degree ≤ d+1.

    p*_i(τ_i') = δ_ii' and ṗ*_i(0) = 0 for i in 0..d; p*_v vanishes on every
    node and has ṗ*_v(0) = 1.

    Attributes:
        scheme: The collocation scheme
        coeffs: (d+2, d+2) table; rows 0..d hold p*_0..p*_d, row d+1 holds p*_v
    """

    @property
    def velocity_index(self) -> int:
        return self.scheme.d + 1


def _solve_conditions(matrix: np.ndarray, what: str) -> np.ndarray:
    try:
        solution = np.linalg.solve(matrix, np.eye(matrix.shape[0]))
    except np.linalg.LinAlgError as e:
        raise SchemeError(f"Singular {what} condition system: {e}") from e
    return solution.T


def lagrange_basis(scheme: CollocationScheme) -> LagrangeBasis:
    """Build the Lagrange basis by solving the Vandermonde interpolation system."""
    vander = P.polyvander(scheme.nodes, scheme.d)
    return LagrangeBasis(scheme=scheme, coeffs=_solve_conditions(vander, "Lagrange"))


def semi_hermite_basis(scheme: CollocationScheme) -> SemiHermiteBasis:
    """Build the semi-Hermite basis from its d+2 defining conditions.

    Rows of the condition matrix are the functionals (value at τ_0..τ_d,
    derivative at 0) applied to the monomials 1, τ, ..., τ^{d+1}.
    """
    n = scheme.d + 2
    conditions = np.zeros((n, n))
    conditions[: n - 1] = P.polyvander(scheme.nodes, n - 1)
    conditions[n - 1, 1] = 1.0
    return SemiHermiteBasis(scheme=scheme, coeffs=_solve_conditions(conditions, "semi-Hermite"))


def quadrature_weights(scheme: CollocationScheme) -> np.ndarray:
    """Weights b_i = ∫₀¹ ℓ_i(τ) dτ of the Lagrange polynomials over τ_1..τ_d."""
    d = scheme.d
    vander = P.polyvander(scheme.points, d - 1).T
    moments = 1.0 / np.arange(1, d + 1)
    return np.linalg.solve(vander, moments)
