import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hswme.config import preset
from hswme.fom import FullMicro, Trajectory, relative_l2_error, run_hswme
from hswme.friction import micro_friction_step
from hswme.model import Grid, ModelParams, offdiag_matrix
from hswme.pod import (PodMicro, ReducedBasis, ReducedFrictionSolver, SnapshotGram, build_reduced_operators,
                       build_snapshot_matrix, identity_basis, pod_basis, pod_micro_friction_step,
                       pod_micro_transport_step, pod_offline, pod_rom_run, pod_train)
from hswme.transport import macro_transport_update, micro_transport_step
from oracles import CellFriction, implicit_projected_solve, random_orthonormal

seeds = st.integers(0, 2**31 - 1)


def fake_traj(V, nu=1.0):
    nf, nx, n = V.shape
    return Trajectory(np.arange(nf, dtype=float), np.ones((nf, nx, 2)), V, ModelParams(nu=nu, n_moments=n),
                      Grid(nx), "dam-break")


def random_basis(rng, n, r):
    return ReducedBasis(random_orthonormal(rng, n, r), np.ones(r))


def random_state(rng, nx, n):
    U = np.stack([rng.uniform(0.5, 1.5, nx), 0.3 * rng.standard_normal(nx)], axis=1)
    return U, 0.05 * rng.standard_normal((nx, n))


def test_snapshot_matrix_layout():
    V = np.arange(24.0).reshape(2, 3, 4)
    S = build_snapshot_matrix([fake_traj(V)])
    assert S.shape == (6, 4)
    np.testing.assert_array_equal(S[:3], V[0])
    np.testing.assert_array_equal(S[3:], V[1])
    assert not build_snapshot_matrix([fake_traj(np.zeros((2, 3, 4)))] * 2).any()
    with pytest.raises(ValueError):
        build_snapshot_matrix([fake_traj(V), fake_traj(np.zeros((1, 3, 5)))])
    with pytest.raises(ValueError):
        build_snapshot_matrix([])


def test_pod_offline_reproduces_low_dimensional_snapshots():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((2, 6))
    V = rng.standard_normal((5, 7, 2)) @ B
    basis, ops = pod_offline([fake_traj(V)], 2)
    S = build_snapshot_matrix([fake_traj(V)])
    np.testing.assert_allclose(S @ basis.W @ basis.W.T, S, atol=1e-10)
    assert np.max(np.abs(basis.W.T @ basis.W - np.eye(2))) <= 1e-12
    assert basis.singular_values[2] <= 1e-6 * basis.singular_values[0]


def test_full_rank_basis_is_orthogonal():
    rng = np.random.default_rng(1)
    basis, _ = pod_offline([fake_traj(rng.standard_normal((3, 8, 5)))], 5)
    np.testing.assert_allclose(basis.W @ basis.W.T, np.eye(5), atol=1e-12)
    with pytest.raises(ValueError):
        pod_offline([fake_traj(rng.standard_normal((3, 8, 5)))], 6)


def test_empty_snapshot_set():
    with pytest.raises(ValueError):
        pod_basis(SnapshotGram(4), 2)


def test_streaming_gram_matches_batch():
    rng = np.random.default_rng(2)
    V = rng.standard_normal((4, 6, 5))
    gram = SnapshotGram(5)
    for frame in V:
        gram(0.0, None, frame)
    S = build_snapshot_matrix([fake_traj(V)])
    np.testing.assert_allclose(gram.G, S.T @ S, atol=1e-12)
    assert gram.n_rows == 24 and gram.n_frames == 4
    with pytest.raises(ValueError):
        gram.add(np.zeros((3, 4)))


def test_reduced_operators():
    p = ModelParams(nu=0.4, lam=0.3, n_moments=6)
    ops = build_reduced_operators(identity_basis(6), p)
    np.testing.assert_array_equal(ops.A_hat, offdiag_matrix(6))
    rng = np.random.default_rng(3)
    basis = random_basis(rng, 6, 3)
    ops = build_reduced_operators(basis, p)
    W = basis.W
    np.testing.assert_allclose(ops.A_hat, W.T @ offdiag_matrix(6) @ W, atol=1e-13)
    np.testing.assert_allclose(ops.M2_hat, np.outer(ops.b_hat, W.sum(axis=0)), atol=1e-13)
    np.testing.assert_array_equal(ops.w_row1, W[0])
    with pytest.raises(ValueError):
        build_reduced_operators(basis, ModelParams(n_moments=5))


def test_truncate():
    basis = random_basis(np.random.default_rng(4), 6, 4)
    small = basis.truncate(2)
    np.testing.assert_array_equal(small.W, basis.W[:, :2])
    with pytest.raises(ValueError):
        basis.truncate(5)


@settings(max_examples=30)
@given(seeds, st.sampled_from(["periodic", "outflow"]))
def test_reduced_transport_commutes_with_projection(seed, bc):
    rng = np.random.default_rng(seed)
    p = ModelParams(n_moments=4)
    grid = Grid(12, bc=bc)
    U, _ = random_state(rng, 12, 4)
    basis = random_basis(rng, 4, 2)
    ops = build_reduced_operators(basis, p)
    V_hat = 0.05 * rng.standard_normal((12, 2))
    V = V_hat @ basis.W.T
    Ut = macro_transport_update(U, V[:, 0], 1e-3, grid, p)
    got = pod_micro_transport_step(Ut, U, V_hat, ops, 1e-3, grid)
    ref = micro_transport_step(Ut, U, V, 1e-3, grid, p) @ basis.W
    np.testing.assert_allclose(got, ref, atol=1e-12)


def test_reduced_transport_identity_and_zero():
    rng = np.random.default_rng(5)
    p = ModelParams(n_moments=4)
    grid = Grid(12, bc="periodic")
    U, V = random_state(rng, 12, 4)
    ops = build_reduced_operators(identity_basis(4), p)
    Ut = macro_transport_update(U, V[:, 0], 1e-3, grid, p)
    np.testing.assert_allclose(pod_micro_transport_step(Ut, U, V, ops, 1e-3, grid),
                               micro_transport_step(Ut, U, V, 1e-3, grid, p), atol=1e-12)
    assert not pod_micro_transport_step(Ut, U, np.zeros((12, 4)), ops, 1e-3, grid).any()


def test_reduced_friction_trivial_and_identity():
    rng = np.random.default_rng(6)
    U, V = random_state(rng, 10, 5)
    free = build_reduced_operators(identity_basis(5), ModelParams(nu=0.0, n_moments=5))
    np.testing.assert_array_equal(pod_micro_friction_step(U, V, free, 0.1), V)
    p = ModelParams(nu=0.9, lam=0.4, n_moments=5)
    ops = build_reduced_operators(identity_basis(5), p)
    np.testing.assert_allclose(pod_micro_friction_step(U, V, ops, 1e-2), micro_friction_step(U, V, 1e-2, p),
                               atol=1e-13)


@settings(max_examples=30)
@given(seeds, st.integers(2, 6))
def test_reduced_friction_is_galerkin_backward_euler(seed, n):
    # backward Euler on the projected ODE, i.e. the implicit system projected
    # onto W; it is not W^T (full step) W unless W spans an invariant subspace
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, n + 1))
    p = ModelParams(nu=rng.uniform(0.1, 2), lam=rng.uniform(0.1, 1), n_moments=n)
    basis = random_basis(rng, n, r)
    ops = build_reduced_operators(basis, p)
    U, _ = random_state(rng, 8, n)
    V_hat = rng.standard_normal((8, r))
    dt = 1e-2
    h, u = U[:, 0], U[:, 1] / U[:, 0]
    W = basis.W
    F = CellFriction(h, u, p)
    ref = implicit_projected_solve(lambda Y: F.linear(Y @ W.T) @ W, F.c @ W, V_hat, dt)
    got = pod_micro_friction_step(U, V_hat, ops, dt)
    assert np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, np.abs(ref).max())


def test_reduced_friction_solver_paths():
    rng = np.random.default_rng(8)
    h = rng.uniform(0.2, 1, 30)
    rhs = rng.standard_normal((30, 3))
    b, w = rng.standard_normal(3), rng.standard_normal(3)
    M = -np.diag([1.0, 5.0, 30.0]) + 0.3 * rng.standard_normal((3, 3))
    s = ReducedFrictionSolver(M, b, w)
    assert s.method == "eigen"
    D = np.eye(3) - (1e-3 / h**2)[:, None, None] * M - (1e-3 / h)[:, None, None] * np.outer(b, w)
    ref = np.linalg.solve(D, rhs[:, :, None])[:, :, 0]
    np.testing.assert_allclose(s.solve(h, rhs, 1e-3), ref, atol=1e-12)
    # a Jordan block has no eigenbasis: the solver falls back to LU
    J = np.array([[-2.0, 1.0, 0.0], [0.0, -2.0, 1.0], [0.0, 0.0, -2.0]])
    s = ReducedFrictionSolver(J, b, w)
    assert s.method == "dense"
    D = np.eye(3) - (1e-3 / h**2)[:, None, None] * J - (1e-3 / h)[:, None, None] * np.outer(b, w)
    np.testing.assert_allclose(s.solve(h, rhs, 1e-3), np.linalg.solve(D, rhs[:, :, None])[:, :, 0], atol=1e-12)


def test_identity_basis_reproduces_full_model():
    cfg = preset("paper-dam-break", nx=100, n_moments=6, T=0.05)
    fom, _ = run_hswme(cfg)
    rom, _ = pod_rom_run(cfg, identity_basis(6))
    assert relative_l2_error(rom, fom) <= 1e-12
    assert np.max(np.abs(rom.V - fom.V)) <= 1e-12
    assert rom.solver == "pod"


def test_rom_uses_the_full_macro_path():
    cfg = preset("paper-dam-break", nx=30, n_moments=5)
    rng = np.random.default_rng(9)
    U, V = random_state(rng, 30, 5)
    ops = build_reduced_operators(identity_basis(5), cfg.params)
    pod, fom = PodMicro(V, identity_basis(5), ops, cfg.grid), FullMicro(V, cfg.grid, cfg.params)
    assert np.array_equal(pod.first_moment(), fom.first_moment())
    a = macro_transport_update(U, pod.first_moment(), 1e-3, cfg.grid, cfg.params)
    b = macro_transport_update(U, fom.first_moment(), 1e-3, cfg.grid, cfg.params)
    assert np.array_equal(a, b)


def test_pod_smooth_wave_conserves_mass():
    cfg = preset("paper-smooth-wave", nx=100, n_moments=6, T=0.05, rank=2)
    basis = pod_train(cfg)
    assert basis.provenance["train_nu"] == [0.01, 1.0]
    _, rep = pod_rom_run(cfg, basis)
    assert np.max(np.abs(rep.mass - rep.mass[0])) <= 1e-12 * rep.mass[0]


def test_pod_run_rejects_wrong_basis():
    cfg = preset("paper-dam-break", nx=20, n_moments=6, T=0.01)
    with pytest.raises(ValueError):
        pod_rom_run(cfg, identity_basis(5))
    with pytest.raises(ValueError):
        pod_train(cfg, train_nu=())
