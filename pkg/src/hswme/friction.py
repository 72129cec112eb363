"""Implicit-Euler friction step, macro (h u_m) first, then the moments.

The micro solve ``D_j v = rhs_j`` with ``D_j = I - dt/h_j^2 M1 - dt/h_j b 1^T``
is done for all cells at once.  Small systems use a batched LU.  For larger N
the solver uses that the viscous operator has the form ``M1 = -4 nu E A`` with
E = diag(2k + 1) and A symmetric positive definite, so

    I - c M1 = E^(1/2) Q (I + 4 nu c Lambda) Q^T E^(-1/2)

from one symmetric eigendecomposition ``E^(1/2) A E^(1/2) = Q Lambda Q^T``.
Every cell then costs two matrix products, and the rank-one ``b 1^T`` part
is added back with the Sherman-Morrison formula.
"""
from __future__ import annotations

import numpy as np

from .errors import DepthError, SingularSystemError
from .model import FrictionOperators, ModelParams, build_friction_operators

DENSE_MAX_MOMENTS = 32
_SINGULAR_TOL = 1e-14


def _check_h(h):
    bad = ~(h > 0)
    if np.any(bad):
        cell = int(np.argmax(bad))
        raise DepthError(f"non-positive water height {h[cell]!r} in cell {cell}", cell=cell)


def macro_friction_update(U: np.ndarray, vsum: np.ndarray, dt: float, params: ModelParams) -> np.ndarray:
    """Backward Euler on the momentum equation with h and the moments frozen.

    ``vsum`` is the per-cell sum of h*alpha_j over all moments.
    """
    h = U[:, 0]
    _check_h(h)
    k = params.nu / params.lam
    out = U.copy()
    if k == 0.0:
        return out
    # h u^{n+1} = (h u^n - dt k sum(alpha)) / (1 + dt k / h)
    out[:, 1] = (U[:, 1] - dt * k * vsum / h) / (1.0 + dt * k / h)
    return out


def macro_friction_step(U, V, dt, params: ModelParams) -> np.ndarray:
    return macro_friction_update(U, V.sum(axis=1), dt, params)


class FrictionSolver:
    """Per-cell micro friction solves for one set of friction parameters.

    Parameters
    ----------
    params : ModelParams
    method : {"auto", "dense", "eigen"}
        "auto" picks the batched LU for ``n_moments <= 32`` and the
        eigendecomposition path above that.  "eigen" needs the dissipative
        coefficient convention.
    """

    def __init__(self, params: ModelParams, method: str = "auto"):
        if method not in ("auto", "dense", "eigen"):
            raise ValueError(f"unknown method {method!r}")
        self.params = params
        self.ops: FrictionOperators = build_friction_operators(params)
        n = params.n_moments
        if method == "auto":
            dissipative = params.friction_index == "dissipative"
            method = "eigen" if dissipative and n > DENSE_MAX_MOMENTS else "dense"
        if method == "eigen" and params.friction_index != "dissipative":
            raise ValueError("the eigen path needs a symmetric positive definite viscous operator")
        self.method = method
        self._lam = None
        if params.friction_index == "dissipative" and n > 0:
            self._setup_eigen()

    def _setup_eigen(self):
        n = self.params.n_moments
        e = 2.0 * np.arange(1, n + 1) + 1.0
        A = -self.ops.M1_unit / (4.0 * e[:, None])
        se = np.sqrt(e)
        lam, Q = np.linalg.eigh(se[:, None] * A * se[None, :])
        if lam.min() <= 0:
            raise ValueError("viscous operator is not positive definite")
        self._sqrt_e = se
        self._lam = lam
        self._Q = Q

    @property
    def has_eigen(self) -> bool:
        return self._lam is not None

    def viscous_inverse(self, c: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Columns ``(I - c_k M1)^-1 Y[:, k]`` through the eigendecomposition."""
        if not self.has_eigen:
            raise ValueError("no eigendecomposition for this coefficient convention")
        se, Q = self._sqrt_e, self._Q
        scale = 1.0 / (1.0 + 4.0 * self.params.nu * np.outer(self._lam, c))
        return se[:, None] * (Q @ (scale * (Q.T @ (Y / se[:, None]))))

    def solve(self, h: np.ndarray, u_new: np.ndarray, V: np.ndarray, dt: float) -> np.ndarray:
        """Return V^{n+1} solving ``D_j V_j^{n+1} = V_j + dt u_j b`` in every cell."""
        _check_h(h)
        if self.params.nu == 0.0:
            return V.copy()
        rhs = V + dt * u_new[:, None] * self.ops.b
        if self.method == "dense":
            return self._solve_dense(h, rhs, dt)
        return self._solve_eigen(h, rhs, dt)

    def _solve_dense(self, h, rhs, dt):
        n = rhs.shape[1]
        D = (np.eye(n) - (dt / h**2)[:, None, None] * self.ops.M1
             - (dt / h)[:, None, None] * self.ops.M2)
        try:
            return np.linalg.solve(D, rhs[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            for j, Dj in enumerate(D):
                if np.linalg.matrix_rank(Dj) < n:
                    raise SingularSystemError(f"friction matrix singular in cell {j}", cell=j) from None
            raise

    def _solve_eigen(self, h, rhs, dt):
        se, Q = self._sqrt_e, self._Q
        scale = 1.0 / (1.0 + 4.0 * (dt * self.params.nu / h**2)[:, None] * self._lam)
        x1 = (((rhs / se) @ Q) * scale) @ Q.T * se
        x2 = ((((self.ops.b / se) @ Q) * scale) @ Q.T) * se
        d = dt / h
        denom = 1.0 - d * x2.sum(axis=1)
        small = np.abs(denom) < _SINGULAR_TOL
        if np.any(small):
            cell = int(np.argmax(small))
            raise SingularSystemError(f"friction matrix singular in cell {cell}", cell=cell)
        return x1 + (d * x1.sum(axis=1) / denom)[:, None] * x2


def micro_friction_step(U_new, V, dt, params: ModelParams, solver: FrictionSolver | None = None) -> np.ndarray:
    """Implicit micro friction with h and the post-macro u_m frozen."""
    if V.shape[1] == 0:
        return V.copy()
    if solver is None:
        solver = FrictionSolver(params)
    h = U_new[:, 0]
    _check_h(h)
    return solver.solve(h, U_new[:, 1] / h, V, dt)


def friction_step(U, V, dt, params: ModelParams, solver: FrictionSolver | None = None):
    U_new = macro_friction_step(U, V, dt, params)
    return U_new, micro_friction_step(U_new, V, dt, params, solver)
