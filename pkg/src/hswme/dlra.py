"""Dynamical low-rank evolution of the moment block with the basis-update and
Galerkin (BUG) integrator.

The micro state is kept as ``V = X S W^T`` with X (n_cells x r) and
W (N x r) orthonormal.  Each micro sub-step (transport, then friction) runs

* a K-step on K = X S with W frozen, giving the new X,
* an L-step on L = W S^T with X frozen, giving the new W,
* an S-step on the coefficients in the new bases, started from
  M S N^T with M = X_new^T X_old and N = W_new^T W_old.

Transport sub-ODEs use one explicit Euler step with the interface
coefficients frozen at the start of the step; friction sub-ODEs use one
backward Euler step.  The macro variables never pass through the low-rank
format.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .fom import FullMicro, simulate
from .friction import FrictionSolver, _check_h
from .linalg import qr, solve_kron, truncated_svd
from .model import ModelParams, apply_offdiag, initial_condition, offdiag_entries
from .pod import ReducedFrictionSolver, reduced_friction_solve
from .transport import InterfaceCoefficients, check_depth, interface_coefficients, pad


@dataclass
class LowRankFactors:
    X: np.ndarray
    S: np.ndarray
    W: np.ndarray

    @property
    def r(self) -> int:
        return self.S.shape[0]

    def lift(self) -> np.ndarray:
        return self.X @ self.S @ self.W.T

    def first_moment(self) -> np.ndarray:
        """Per-cell h*alpha_1 = X S (first row of W)."""
        return self.X @ (self.S @ self.W[0])

    def moment_sum(self) -> np.ndarray:
        return self.X @ (self.S @ self.W.sum(axis=0))

    def copy(self) -> "LowRankFactors":
        return LowRankFactors(self.X.copy(), self.S.copy(), self.W.copy())


def dlra_init(V0: np.ndarray, r: int) -> LowRankFactors:
    """Rank-r truncated SVD of the initial micro state.

    Missing directions (V0 = 0, or rank below r) are filled with
    deterministic completion columns and zero singular values.
    """
    V0 = np.asarray(V0, dtype=float)
    nx, n = V0.shape
    if not 1 <= r <= min(nx, n):
        raise ValueError(f"rank {r} outside [1, {min(nx, n)}]")
    svd = truncated_svd(V0, r)
    return LowRankFactors(svd.U, np.diag(svd.sigma), svd.Vt.T.copy())


# --------------------------------------------------------------------------
# transport
# --------------------------------------------------------------------------

def _interface_partners(X: np.ndarray) -> np.ndarray:
    """Rows X_{i-1} + X_i for interface i (0..Nx), interior cells only.

    Interface i receives contributions from the two cells it borders; a
    ghost cell is not a test function, so it contributes zero.
    """
    nx, r = X.shape
    Y = np.zeros((nx + 1, r))
    Y[1:] += X
    Y[:-1] += X
    return Y


def transport_K_rhs(K, W0, coef: InterfaceCoefficients, dt, grid, W_out=None) -> np.ndarray:
    """F(K W0^T) W_out for the frozen-coefficient micro transport (W_out = W0 by default)."""
    if W_out is None:
        W_out = W0
    sup, sub = offdiag_entries(W0.shape[0])
    P = W0.T @ W_out
    PA = apply_offdiag(W0.T, sup, sub) @ W_out   # (A W0)^T W_out
    Kp = pad(K, grid.bc)
    dK = np.diff(Kp, axis=0)
    flux = (coef.ubar[:, None] * (dK @ P) + coef.abar[:, None] * (dK @ PA)
            + np.outer(coef.g[:, 0], W_out[0]))
    if W_out.shape[0] >= 2:
        flux += np.outer(coef.g[:, 1], W_out[1])
    lap = (Kp[2:] - 2.0 * K + Kp[:-2]) @ P
    return lap / (2.0 * dt) - (flux[1:] + flux[:-1]) / (2.0 * grid.dx)


@dataclass(frozen=True)
class ProjectedTransport:
    """r x r projections of the transport stencil onto a spatial basis X.

    ``lap = sum_j (X_{j-1} - 2 X_j + X_{j+1}) X_j^T`` and, with interface
    jumps dX and partner sums Y, ``ubar = dX^T diag(u_bar) Y`` and
    ``abar = dX^T diag(alpha_bar) Y``; ``g`` holds the two inhomogeneity
    rows ``sum_i g_i Y_i``.
    """

    lap: np.ndarray
    ubar: np.ndarray
    abar: np.ndarray
    g: np.ndarray


def project_transport(X, coef: InterfaceCoefficients, grid) -> ProjectedTransport:
    Xp = pad(X, grid.bc)
    dX = np.diff(Xp, axis=0)
    Y = _interface_partners(X)
    lap = (Xp[2:] - 2.0 * X + Xp[:-2]).T @ X
    return ProjectedTransport(
        lap=lap,
        ubar=dX.T @ (coef.ubar[:, None] * Y),
        abar=dX.T @ (coef.abar[:, None] * Y),
        g=coef.g.T @ Y,
    )


def transport_L_rhs(L, proj: ProjectedTransport, dt, grid) -> np.ndarray:
    """(F(X L^T))^T X in terms of the projected stencil, shape (N, r)."""
    n = L.shape[0]
    sup, sub = offdiag_entries(n)
    AL = apply_offdiag(L.T, sup, sub).T
    out = L @ proj.lap / (2.0 * dt) - (L @ proj.ubar + AL @ proj.abar) / (2.0 * grid.dx)
    out[0] -= proj.g[0] / (2.0 * grid.dx)
    if n >= 2:
        out[1] -= proj.g[1] / (2.0 * grid.dx)
    return out


def transport_S_rhs(S, X, W, proj: ProjectedTransport, dt, grid) -> np.ndarray:
    """X^T F(X S W^T) W."""
    return (W.T @ transport_L_rhs(W @ S.T, proj, dt, grid)).T


S_STEP_MODES = ("full-step", "projected")


def dlra_transport_step(U_tilde, U_old, factors: LowRankFactors, dt, grid, s_step: str = "full-step") -> LowRankFactors:
    """One BUG step of the explicit micro transport.

    ``s_step`` selects the S-step right-hand side, both starting from
    ``M S0 N^T``:

    * "full-step" evaluates F at the old state, ``X1^T F(X0 S0 W0^T) W1``,
      i.e. the Galerkin projection of the full explicit Euler step.  With
      r = N it reproduces the full model exactly.
    * "projected" evaluates F at the projected start value,
      ``X1^T F(X1 S W1^T) W1``, the textbook Galerkin sub-ODE.  Its
      projection error does not shrink with dt here because the
      Lax-Friedrichs right-hand side carries a 1/dt term.
    """
    if s_step not in S_STEP_MODES:
        raise ValueError(f"s_step must be one of {S_STEP_MODES}")
    X0, S0, W0 = factors.X, factors.S, factors.W
    check_depth(U_old[:, 0])
    coef = interface_coefficients(U_tilde, factors.first_moment() / U_old[:, 0], grid)

    # K-step
    K = X0 @ S0
    X1 = qr(K + dt * transport_K_rhs(K, W0, coef, dt, grid)).Q
    M = X1.T @ X0

    # L-step (independent of the K-step)
    L = W0 @ S0.T
    proj0 = project_transport(X0, coef, grid)
    W1 = qr(L + dt * transport_L_rhs(L, proj0, dt, grid)).Q
    Nm = W1.T @ W0

    # S-step in the updated bases
    S = M @ S0 @ Nm.T
    if s_step == "full-step":
        S1 = S + dt * (X1.T @ transport_K_rhs(K, W0, coef, dt, grid, W_out=W1))
    else:
        proj1 = project_transport(X1, coef, grid)
        S1 = S + dt * transport_S_rhs(S, X1, W1, proj1, dt, grid)
    return LowRankFactors(X1, S1, W1)


# --------------------------------------------------------------------------
# friction
# --------------------------------------------------------------------------

def friction_L_solve(solver: FrictionSolver, H2, H1, dt, rhs) -> np.ndarray:
    """Solve ``L - dt M1 L H2 - dt b 1^T L H1 = rhs`` for L (N x r).

    H2 and H1 are symmetric r x r.  With ``H2 = P diag(theta) P^T`` the
    columns of ``L P`` decouple into shifted viscous solves, coupled only
    through the r sums ``s = 1^T L P``, which solve a small r x r system.
    Falls back to the dense Kronecker solve without an eigendecomposition.
    """
    ops = solver.ops
    if not solver.has_eigen:
        return solve_kron(ops.M1, H2, ops.M2, H1, dt, rhs)
    theta, P = np.linalg.eigh(H2)
    C = P.T @ H1 @ P
    c = dt * theta
    r = len(theta)
    Y = solver.viscous_inverse(np.concatenate([c, c]),
                               np.concatenate([rhs @ P, np.repeat(ops.b[:, None], r, axis=1)], axis=1))
    BR, Bb = Y[:, :r], Y[:, r:]
    a = BR.sum(axis=0)
    cb = Bb.sum(axis=0)
    s = np.linalg.solve(np.eye(r) - dt * cb[:, None] * C.T, a)
    Lp = BR + dt * (C.T @ s)[None, :] * Bb
    return Lp @ P.T


def friction_K_step(h, u, K, W, dt, ops) -> np.ndarray:
    """Backward Euler for K' = H^-2 K W^T M1^T W + H^-1 K W^T M2^T W + u b^T W (W frozen)."""
    M1w = W.T @ ops.M1 @ W
    bw = W.T @ ops.b
    wsum = W.sum(axis=0)
    red = ReducedFrictionSolver(M1w, bw, wsum)
    return reduced_friction_solve(h, u, K, M1w, np.outer(bw, wsum), bw, dt, red)


def friction_L_step(h, u, L, X, dt, solver: FrictionSolver) -> np.ndarray:
    """Backward Euler for L' = M1 L X^T H^-2 X + M2 L X^T H^-1 X + b u^T X (X frozen)."""
    hm2 = X.T @ (X / h[:, None] ** 2)
    hm1 = X.T @ (X / h[:, None])
    return friction_L_solve(solver, hm2, hm1, dt, L + dt * np.outer(solver.ops.b, u @ X))


def friction_S_step(h, u, S, X, W, dt, ops) -> np.ndarray:
    """Backward Euler for the coefficients with both bases frozen (r^2 unknowns)."""
    g2 = X.T @ (X / h[:, None] ** 2)
    g1 = X.T @ (X / h[:, None])
    M1h = W.T @ ops.M1 @ W
    M2h = np.outer(W.T @ ops.b, W.sum(axis=0))
    rhs = S + dt * np.outer(X.T @ u, W.T @ ops.b)
    return solve_kron(g2, M1h.T, g1, M2h.T, dt, rhs)


def dlra_friction_step(U_new, factors: LowRankFactors, dt, params: ModelParams,
                       solver: FrictionSolver | None = None) -> LowRankFactors:
    """Backward-Euler BUG step for V' = H^-2 V M1^T + H^-1 V M2^T + u b^T."""
    if params.nu == 0.0:
        return factors.copy()
    if solver is None:
        solver = FrictionSolver(params)
    ops = solver.ops
    h = U_new[:, 0]
    _check_h(h)
    u = U_new[:, 1] / h
    X1, S1, W1 = factors.X, factors.S, factors.W

    X2 = qr(friction_K_step(h, u, X1 @ S1, W1, dt, ops)).Q
    W2 = qr(friction_L_step(h, u, W1 @ S1.T, X1, dt, solver)).Q
    S0 = (X2.T @ X1) @ S1 @ (W2.T @ W1).T
    return LowRankFactors(X2, friction_S_step(h, u, S0, X2, W2, dt, ops), W2)


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

class DlraMicro(FullMicro):
    def __init__(self, V0, r: int, grid, params: ModelParams, s_step: str = "full-step"):
        self.f = dlra_init(V0, r)
        self.s_step = s_step
        self.grid = grid
        self.params = params
        self.solver = FrictionSolver(params) if params.n_moments else None

    def first_moment(self):
        return self.f.first_moment()

    def moment_sum(self):
        return self.f.moment_sum()

    def transport(self, U_tilde, U_old, dt):
        self.f = dlra_transport_step(U_tilde, U_old, self.f, dt, self.grid, self.s_step)

    def friction(self, U_new, dt):
        self.f = dlra_friction_step(U_new, self.f, dt, self.params, self.solver)

    def full(self):
        return self.f.lift()

    def is_finite(self):
        return bool(np.isfinite(self.f.S).all() and np.isfinite(self.f.X).all() and np.isfinite(self.f.W).all())


def dlra_run(config: RunConfig, r: int | None = None, keep_frames: bool = True, on_frame=None,
             s_step: str = "full-step"):
    params, grid = config.params, config.grid
    U0, V0 = initial_condition(config.case, grid, params)
    backend = DlraMicro(V0, r or config.rank, grid, params, s_step)
    return simulate(U0, backend, grid, params, config.T, config.stride, config.output_times,
                    keep_frames, on_frame, config.case, "dlra")
