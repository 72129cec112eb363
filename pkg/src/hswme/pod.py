"""POD-Galerkin reduction of the moment block.

Offline: stack micro snapshots, take the leading right singular vectors W
(N x r) and project the moment operators onto them.  Online: evolve the
coefficients V_hat (n_cells x r) with V ~ V_hat W^T, while h and hu are
advanced by the unreduced macro code path.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, override
from .fom import FullMicro, run_hswme, simulate
from .friction import _check_h
from .linalg import svd_from_gram
from .model import ModelParams, initial_condition, offdiag_matrix, unit_friction_matrices
from .transport import check_depth, interface_coefficients, pad


@dataclass
class ReducedBasis:
    """Orthonormal moment basis W (N x r) plus the POD spectrum it came from."""

    W: np.ndarray
    singular_values: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def r(self) -> int:
        return self.W.shape[1]

    @property
    def n_moments(self) -> int:
        return self.W.shape[0]

    def truncate(self, r: int) -> "ReducedBasis":
        if not 1 <= r <= self.r:
            raise ValueError(f"cannot truncate a rank-{self.r} basis to {r}")
        return ReducedBasis(self.W[:, :r].copy(), self.singular_values, dict(self.provenance))


@dataclass
class ReducedOperators:
    """Moment operators projected onto W for one friction parameter set.

    The micro friction source in reduced coordinates is
    ``M1_hat v / h**2 + M2_hat v / h + u_m * b_hat``.
    """

    A_hat: np.ndarray
    M1_hat: np.ndarray
    M2_hat: np.ndarray
    b_hat: np.ndarray
    w_row1: np.ndarray
    w_row2: np.ndarray
    w_sum: np.ndarray
    params: ModelParams


def identity_basis(n: int) -> ReducedBasis:
    return ReducedBasis(np.eye(n), np.ones(n), {"kind": "identity"})


def build_reduced_operators(basis: ReducedBasis, params: ModelParams) -> ReducedOperators:
    W = basis.W
    n, r = W.shape
    if n != params.n_moments:
        raise ValueError(f"basis has {n} moments, model has {params.n_moments}")
    M1u, bu = unit_friction_matrices(n, params.friction_index)
    M1 = params.nu * M1u
    b = (params.nu / params.lam) * bu
    b_hat = W.T @ b
    w_sum = W.sum(axis=0)
    return ReducedOperators(
        A_hat=W.T @ offdiag_matrix(n) @ W,
        M1_hat=W.T @ M1 @ W,
        M2_hat=np.outer(b_hat, w_sum),
        b_hat=b_hat,
        w_row1=W[0].copy(),
        w_row2=W[1].copy() if n >= 2 else np.zeros(r),
        w_sum=w_sum,
        params=params,
    )


# --------------------------------------------------------------------------
# offline
# --------------------------------------------------------------------------

def build_snapshot_matrix(trajectories) -> np.ndarray:
    """Stack every recorded micro frame of every run (frames in time order)."""
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("no trajectories given")
    n = trajectories[0].V.shape[2]
    for tr in trajectories:
        if tr.V.shape[2] != n:
            raise ValueError(f"moment count mismatch: {tr.V.shape[2]} vs {n}")
    return np.concatenate([tr.V.reshape(-1, n) for tr in trajectories], axis=0)


class SnapshotGram:
    """Streaming accumulator of the snapshot Gram matrix S^T S (N x N).

    Feeding frames one at a time keeps memory at N^2 instead of storing
    every snapshot; the right singular vectors of S are the eigenvectors of
    S^T S.
    """

    def __init__(self, n_moments: int):
        self.G = np.zeros((n_moments, n_moments))
        self.n_rows = 0
        self.n_frames = 0

    def add(self, V: np.ndarray) -> None:
        if V.shape[1] != self.G.shape[0]:
            raise ValueError(f"moment count mismatch: {V.shape[1]} vs {self.G.shape[0]}")
        self.G += V.T @ V
        self.n_rows += V.shape[0]
        self.n_frames += 1

    def __call__(self, t, U, V):
        self.add(V)


def pod_basis(gram: SnapshotGram, r: int, provenance: dict | None = None) -> ReducedBasis:
    n = gram.G.shape[0]
    if gram.n_rows == 0:
        raise ValueError("empty snapshot set")
    if not 1 <= r <= n:
        raise ValueError(f"rank {r} outside [1, {n}]")
    full = svd_from_gram(gram.G, n)
    W = full.Vt[:r].T.copy()
    prov = dict(provenance or {})
    prov.setdefault("n_snapshot_rows", gram.n_rows)
    return ReducedBasis(W, full.sigma, prov)


def pod_offline(trajectories, r: int, params: ModelParams | None = None):
    """Basis and reduced operators from recorded trajectories.

    ``params`` selects the friction parameters of the reduced operators
    (default: those of the first trajectory).
    """
    trajectories = list(trajectories)
    S = build_snapshot_matrix(trajectories)
    gram = SnapshotGram(S.shape[1])
    gram.add(S)
    gram.n_frames = sum(len(tr) for tr in trajectories)
    prov = {"cases": sorted({tr.case for tr in trajectories}),
            "nu": [tr.params.nu for tr in trajectories]}
    basis = pod_basis(gram, r, prov)
    return basis, build_reduced_operators(basis, params or trajectories[0].params)


def pod_train(config: RunConfig, r: int | None = None, train_nu=None) -> ReducedBasis:
    """Run the full model once per training viscosity and stream snapshots."""
    train_nu = tuple(train_nu if train_nu is not None else config.train_nu)
    if not train_nu:
        raise ValueError("no training viscosities given")
    gram = SnapshotGram(config.n_moments)
    for nu in train_nu:
        cfg = override(config, nu=nu, solver="fom", output_times=())
        run_hswme(cfg, keep_frames=False, on_frame=gram)
    prov = {"case": config.case, "train_nu": list(train_nu), "nx": config.nx,
            "T": config.T, "stride": config.stride}
    return pod_basis(gram, r or config.rank, prov)


# --------------------------------------------------------------------------
# online
# --------------------------------------------------------------------------

def pod_micro_transport_step(U_tilde, U_old, V_hat, ops: ReducedOperators, dt, grid) -> np.ndarray:
    """Reduced micro transport; alpha_1 is reconstructed through the first row of W."""
    check_depth(U_old[:, 0])
    alpha1 = (V_hat @ ops.w_row1) / U_old[:, 0]
    coef = interface_coefficients(U_tilde, alpha1, grid)
    Vp = pad(V_hat, grid.bc)
    dV = np.diff(Vp, axis=0)
    flux = (coef.ubar[:, None] * dV + coef.abar[:, None] * (dV @ ops.A_hat.T)
            + np.outer(coef.g[:, 0], ops.w_row1) + np.outer(coef.g[:, 1], ops.w_row2))
    return 0.5 * (Vp[2:] + Vp[:-2]) - dt / (2.0 * grid.dx) * (flux[1:] + flux[:-1])


_EIG_COND_MAX = 1e8


class ReducedFrictionSolver:
    """Per-cell solves of ``(I - c_j M1_hat - d_j b_hat w_sum^T) x_j = y_j``.

    With c_j = dt/h_j^2 and d_j = dt/h_j.  M1_hat (r x r) is diagonalized
    once, ``M1_hat = P diag(mu) P^-1``, so every cell costs two small
    products; the rank-one part is added with Sherman-Morrison.  If the
    eigenvector matrix is badly conditioned the batched LU is used instead.
    """

    def __init__(self, M1_hat, b_hat, w_sum):
        self.M1_hat = np.asarray(M1_hat, dtype=float)
        self.b_hat = np.asarray(b_hat, dtype=float)
        self.w_sum = np.asarray(w_sum, dtype=float)
        self.method = "dense"
        try:
            mu, P = np.linalg.eig(self.M1_hat)
            ok = np.linalg.cond(P) < _EIG_COND_MAX
        except np.linalg.LinAlgError:
            ok = False
        if ok:
            Pinv = np.linalg.inv(P)
            if np.all(mu.imag == 0):
                mu, P, Pinv = mu.real, P.real, Pinv.real
            self.method = "eigen"
            self._mu = mu
            self._Pt = P.T.copy()
            self._PinvT = Pinv.T.copy()
            self._bP = Pinv @ self.b_hat

    def solve(self, h, rhs, dt) -> np.ndarray:
        if self.method == "dense":
            r = rhs.shape[1]
            D = (np.eye(r) - (dt / h**2)[:, None, None] * self.M1_hat
                 - (dt / h)[:, None, None] * np.outer(self.b_hat, self.w_sum))
            return np.linalg.solve(D, rhs[:, :, None])[:, :, 0]
        s = 1.0 / (1.0 - (dt / h**2)[:, None] * self._mu)
        x1 = ((rhs @ self._PinvT) * s) @ self._Pt
        x2 = (s * self._bP) @ self._Pt
        if np.iscomplexobj(x1):
            x1, x2 = x1.real, x2.real
        d = dt / h
        return x1 + (d * (x1 @ self.w_sum) / (1.0 - d * (x2 @ self.w_sum)))[:, None] * x2


def reduced_friction_solve(h, u, K, M1_hat, M2_hat, b_hat, dt, solver: ReducedFrictionSolver | None = None) -> np.ndarray:
    """Per-cell solve (I - dt/h^2 M1_hat - dt/h M2_hat) k = k_old + dt u b_hat.

    Without ``solver`` the systems are assembled and solved by batched LU;
    ``M2_hat`` is only used on that path.
    """
    _check_h(h)
    rhs = K + dt * u[:, None] * b_hat
    if solver is not None:
        return solver.solve(h, rhs, dt)
    r = K.shape[1]
    D = np.eye(r) - (dt / h**2)[:, None, None] * M1_hat - (dt / h)[:, None, None] * M2_hat
    return np.linalg.solve(D, rhs[:, :, None])[:, :, 0]


def pod_micro_friction_step(U_new, V_hat, ops: ReducedOperators, dt, solver: ReducedFrictionSolver | None = None) -> np.ndarray:
    if ops.params.nu == 0.0:
        return V_hat.copy()
    h = U_new[:, 0]
    _check_h(h)
    return reduced_friction_solve(h, U_new[:, 1] / h, V_hat, ops.M1_hat, ops.M2_hat, ops.b_hat, dt, solver)


class PodMicro(FullMicro):
    """Micro backend carrying reduced coefficients V_hat (n_cells x r)."""

    def __init__(self, V0, basis: ReducedBasis, ops: ReducedOperators, grid):
        self.basis = basis
        self.ops = ops
        self.grid = grid
        self.V_hat = np.asarray(V0, dtype=float) @ basis.W
        self.solver = ReducedFrictionSolver(ops.M1_hat, ops.b_hat, ops.w_sum)

    def first_moment(self):
        return self.V_hat @ self.ops.w_row1

    def moment_sum(self):
        return self.V_hat @ self.ops.w_sum

    def transport(self, U_tilde, U_old, dt):
        self.V_hat = pod_micro_transport_step(U_tilde, U_old, self.V_hat, self.ops, dt, self.grid)

    def friction(self, U_new, dt):
        self.V_hat = pod_micro_friction_step(U_new, self.V_hat, self.ops, dt, self.solver)

    def full(self):
        return self.V_hat @ self.basis.W.T

    def is_finite(self):
        return bool(np.isfinite(self.V_hat).all())


def pod_rom_run(config: RunConfig, basis: ReducedBasis, ops: ReducedOperators | None = None,
                keep_frames: bool = True, on_frame=None):
    """Online phase: unreduced macro steps, reduced micro steps."""
    params, grid = config.params, config.grid
    if basis.n_moments != params.n_moments:
        raise ValueError(f"basis has {basis.n_moments} moments, config has {params.n_moments}")
    if ops is None:
        ops = build_reduced_operators(basis, params)
    U0, V0 = initial_condition(config.case, grid, params)
    backend = PodMicro(V0, basis, ops, grid)
    return simulate(U0, backend, grid, params, config.T, config.stride, config.output_times,
                    keep_frames, on_frame, config.case, "pod")
