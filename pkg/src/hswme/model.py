"""Hyperbolic shallow water moment model: parameters, Legendre basis,
transport blocks, friction source and the two benchmark initial states.

Moment indexing
---------------
Moments are numbered 1..N in docstrings (alpha_1 is the linear profile
coefficient).  Arrays are 0-based, so moment ``k`` lives in column ``k - 1``
of a micro state ``V`` (shape ``(n_cells, N)``).  Equation indices of the
source term start at 0 (the momentum equation), so equation ``i`` of the
full system sits at position ``i + 1`` of the ``(N + 2)``-vector.

======================  ===================  =====================
quantity                1-based label        array position
======================  ===================  =====================
h, h*u_m                --                   U[:, 0], U[:, 1]
h*alpha_k               k = 1..N             V[:, k - 1]
source entry S_i        i = 0..N             S[i + 1]  (S[0] = 0)
======================  ===================  =====================
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DepthError


# "dissipative": a_ij = m(m+1)/2, m = min(i, j), for i + j even (zero otherwise);
#   this is the Gram matrix of the basis derivatives divided by 4, so the
#   viscous term is dissipative.
# "as-printed": a_ij = m(m+1)/2, m = min(i - 1, j), for i + j odd; the same
#   table with the equation index shifted by one.  It makes the viscous operator
#   indefinite and full runs blow up; kept for comparison only.
FRICTION_INDEX_CONVENTIONS = ("dissipative", "as-printed")


class BoundaryCondition(str, enum.Enum):
    PERIODIC = "periodic"
    OUTFLOW = "outflow"


class Case(str, enum.Enum):
    DAM_BREAK = "dam-break"
    SMOOTH_WAVE = "smooth-wave"


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical constants of one simulation.

    ``n_moments = 0`` gives the plain shallow water equations.
    """

    g: float = 9.81
    nu: float = 1.0
    lam: float = 0.5
    n_moments: int = 10
    cfl: float = 0.25
    friction_index: str = "dissipative"

    def __post_init__(self):
        if self.friction_index not in FRICTION_INDEX_CONVENTIONS:
            raise ValueError(f"friction_index must be one of {FRICTION_INDEX_CONVENTIONS}, got {self.friction_index!r}")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if not self.nu >= 0:
            raise ValueError(f"nu must be non-negative, got {self.nu}")
        if not self.lam > 0:
            raise ValueError(f"slip length must be positive, got {self.lam}")
        if int(self.n_moments) != self.n_moments or self.n_moments < 0:
            raise ValueError(f"n_moments must be a non-negative integer, got {self.n_moments}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")


@dataclass(frozen=True)
class Grid:
    n_cells: int
    x_min: float = -1.0
    x_max: float = 1.0
    bc: BoundaryCondition = BoundaryCondition.OUTFLOW

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells}")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be smaller than x_max")
        object.__setattr__(self, "bc", BoundaryCondition(self.bc))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    def cell_index(self, x: float) -> int:
        """Index of the cell containing ``x`` (right boundary belongs to the last cell)."""
        if not self.x_min <= x <= self.x_max:
            raise ValueError(f"position {x} outside [{self.x_min}, {self.x_max}]")
        return min(int((x - self.x_min) // self.dx), self.n_cells - 1)


# --------------------------------------------------------------------------
# Scaled Legendre basis
# --------------------------------------------------------------------------

def legendre_coefficients(j: int) -> np.ndarray:
    """Monomial coefficients (ascending powers) of the degree-``j`` scaled
    Legendre polynomial ``(1/j!) d^j/dz^j (z - z^2)^j`` on [0, 1]."""
    if j < 0:
        raise ValueError("degree must be non-negative")
    # (z - z^2)^j = sum_k C(j,k) (-1)^k z^(j+k); differentiate j times
    coeffs = np.zeros(j + 1)
    for k in range(j + 1):
        p = j + k
        coeffs[k] = (-1) ** k * math.comb(j, k) * math.perm(p, j) / math.factorial(j)
    return coeffs


def legendre_phi(j: int, zeta):
    """Evaluate the scaled Legendre polynomial phi_j at ``zeta`` in [0, 1]."""
    z = np.asarray(zeta, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise ValueError("zeta must lie in [0, 1]")
    value = np.polynomial.polynomial.polyval(z, legendre_coefficients(j))
    return float(value) if value.ndim == 0 else value


def reconstruct_velocity(u_m: float, alphas, zeta):
    """Velocity profile u_m + sum_j alpha_j phi_j(zeta)."""
    alphas = np.asarray(alphas, dtype=float)
    u = u_m + np.zeros_like(np.asarray(zeta, dtype=float))
    for j, a in enumerate(alphas, start=1):
        if a != 0.0:
            u = u + a * legendre_phi(j, zeta)
    return float(u) if np.ndim(u) == 0 else u


# --------------------------------------------------------------------------
# Transport matrix
# --------------------------------------------------------------------------

def offdiag_entries(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Super- and sub-diagonal of the moment coupling matrix A (N x N).

    ``sup[k-1] = A_{k,k+1} = (k+2)/(2k+3)`` for k = 1..N-1 and
    ``sub[k-2] = A_{k,k-1} = (k-1)/(2k-1)`` for k = 2..N.
    """
    k = np.arange(1, n, dtype=float)
    sup = (k + 2) / (2 * k + 3)
    k = np.arange(2, n + 1, dtype=float)
    sub = (k - 1) / (2 * k - 1)
    return sup, sub


def offdiag_matrix(n: int) -> np.ndarray:
    """Dense copy of A; only meant for tests and for small projections."""
    sup, sub = offdiag_entries(n)
    return np.diag(sup, 1) + np.diag(sub, -1)


def apply_offdiag(v: np.ndarray, sup: np.ndarray, sub: np.ndarray) -> np.ndarray:
    """Row-wise product ``v @ A.T`` i.e. A applied to each moment vector in ``v[..., :]``."""
    out = np.zeros_like(v)
    if v.shape[-1] > 1:
        out[..., :-1] = sup * v[..., 1:]
        out[..., 1:] += sub * v[..., :-1]
    return out


@dataclass(frozen=True)
class TransportBlocks:
    """Blocks of the transport matrix at one state.

    ``A_vv`` is never stored densely: it equals ``u_m * I + alpha1 * A``.
    """

    A_uu: np.ndarray
    A_uv: np.ndarray
    A_vu: np.ndarray
    u_m: float
    alpha1: float
    n_moments: int

    def apply_vv(self, v: np.ndarray) -> np.ndarray:
        sup, sub = offdiag_entries(self.n_moments)
        return self.u_m * v + self.alpha1 * apply_offdiag(v, sup, sub)

    def dense_vv(self) -> np.ndarray:
        return self.u_m * np.eye(self.n_moments) + self.alpha1 * offdiag_matrix(self.n_moments)


def transport_blocks(h: float, u_m: float, alpha1: float, params: ModelParams) -> TransportBlocks:
    if not h > 0:
        raise DepthError(f"non-positive water height {h}")
    n = params.n_moments
    A_uu = np.array([[0.0, 1.0], [params.g * h - u_m**2 - alpha1**2 / 3.0, 2.0 * u_m]])
    A_uv = np.zeros((2, n))
    A_vu = np.zeros((n, 2))
    if n >= 1:
        A_uv[1, 0] = 2.0 / 3.0 * alpha1
        A_vu[0, 0] = -2.0 * u_m * alpha1
        A_vu[0, 1] = 2.0 * alpha1
    if n >= 2:
        A_vu[1, 0] = -2.0 / 3.0 * alpha1**2
    return TransportBlocks(A_uu, A_uv, A_vu, float(u_m), float(alpha1), n)


# --------------------------------------------------------------------------
# Friction
# --------------------------------------------------------------------------

def coefficient_a(i: int, j: int, convention: str = "dissipative") -> Fraction:
    """Viscous coupling constant a_{i,j} for equation index i >= 0 and moment j >= 1."""
    if convention == "dissipative":
        if (i + j) % 2:
            return Fraction(0)
        m = min(i, j)
    elif convention == "as-printed":
        if (i + j) % 2 == 0:
            return Fraction(0)
        m = min(i - 1, j)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return Fraction(m * (m + 1), 2)


def source_term(h: float, u_m: float, alphas, params: ModelParams) -> np.ndarray:
    """Friction right-hand side for (h, hu, h alpha_1..N); the mass entry is 0."""
    if not h > 0:
        raise DepthError(f"non-positive water height {h}")
    alphas = np.asarray(alphas, dtype=float)
    n = len(alphas)
    out = np.zeros(n + 2)
    slip = u_m + alphas.sum()
    for i in range(n + 1):
        inner = sum(float(coefficient_a(i, j, params.friction_index)) * alphas[j - 1] for j in range(1, n + 1))
        out[i + 1] = -(params.nu / params.lam) * (2 * i + 1) * slip - 4.0 * params.nu / h * (2 * i + 1) * inner
    return out


@dataclass(frozen=True)
class FrictionOperators:
    """Linear friction operators of the micro block for one (nu, lambda).

    The micro source is ``M1 v / h**2 + M2 v / h + u_m * b``.  ``M1_unit``,
    ``M2_unit`` and ``b_unit`` hold M1/nu, M2*lambda/nu and b*lambda/nu.
    """

    M1: np.ndarray
    M2: np.ndarray
    b: np.ndarray
    M1_unit: np.ndarray = field(repr=False)
    b_unit: np.ndarray = field(repr=False)

    @property
    def M2_unit(self) -> np.ndarray:
        return np.outer(self.b_unit, np.ones(len(self.b_unit)))


def unit_friction_matrices(n: int, convention: str = "dissipative") -> tuple[np.ndarray, np.ndarray]:
    """M1/nu and b*lambda/nu for N moments."""
    M1u = np.zeros((n, n))
    for k in range(1, n + 1):
        for j in range(1, n + 1):
            a = coefficient_a(k, j, convention)
            if a:
                M1u[k - 1, j - 1] = -4.0 * (2 * k + 1) * float(a)
    bu = -(2.0 * np.arange(1, n + 1) + 1.0)
    return M1u, bu


def build_friction_operators(params: ModelParams) -> FrictionOperators:
    n = params.n_moments
    if n < 1:
        raise ValueError("friction operators need at least one moment")
    M1u, bu = unit_friction_matrices(n, params.friction_index)
    M1 = params.nu * M1u
    b = (params.nu / params.lam) * bu
    return FrictionOperators(M1=M1, M2=np.outer(b, np.ones(n)), b=b, M1_unit=M1u, b_unit=bu)


# --------------------------------------------------------------------------
# Test cases
# --------------------------------------------------------------------------

def dam_break_height(x):
    return 0.3 + 0.35 * (np.tanh(x) - np.tanh(x - 0.2))


def smooth_wave_height(x):
    return 1.0 + np.exp(3.0 * np.cos(np.pi * (x + 0.5))) / np.exp(4.0)


def initial_condition(case, grid: Grid, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centred initial (U, V) for one of the benchmark cases."""
    case = Case(case)
    x = grid.centers
    n = params.n_moments
    U = np.zeros((grid.n_cells, 2))
    V = np.zeros((grid.n_cells, n))
    if case is Case.DAM_BREAK:
        U[:, 0] = dam_break_height(x)
    else:
        h = smooth_wave_height(x)
        U[:, 0] = h
        U[:, 1] = 0.25 * h
        if n >= 1:
            # u = 0.25 (1 - phi_1 + phi_N); for N = 1 the two terms cancel
            V[:, 0] += -0.25 * h
            V[:, n - 1] += 0.25 * h
    return U, V
