import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hswme.errors import DepthError
from hswme.model import Grid, ModelParams
from hswme.transport import (macro_transport_step, macro_transport_update, max_wave_speed, micro_transport_rhs,
                             micro_transport_step, pad, time_step, transport_step)
from oracles import dense_micro_step, dense_pc_step, dense_transport_matrix

seeds = st.integers(0, 2**31 - 1)
BCS = ["periodic", "outflow"]


def random_state(rng, nx, n, amp=0.3):
    U = np.stack([rng.uniform(0.5, 1.5, nx), amp * rng.standard_normal(nx)], axis=1)
    V = 0.1 * amp * rng.standard_normal((nx, n))
    return U, V


def test_pad_policies():
    a = np.arange(4.0)
    np.testing.assert_array_equal(pad(a, Grid(4, bc="periodic").bc), [3, 0, 1, 2, 3, 0])
    np.testing.assert_array_equal(pad(a, Grid(4, bc="outflow").bc), [0, 0, 1, 2, 3, 3])


def test_max_wave_speed_examples():
    p = ModelParams(g=9.81)
    U = np.array([[1.0, 0.0]])
    assert max_wave_speed(U, np.zeros(1), p) == pytest.approx(np.sqrt(9.81))
    assert max_wave_speed(np.array([[1.0, 2.0]]), np.zeros(1), p) == pytest.approx(2 + np.sqrt(9.81))
    assert max_wave_speed(U, np.ones(1), p) == pytest.approx(np.sqrt(10.81))
    with pytest.raises(DepthError):
        max_wave_speed(np.array([[0.0, 0.0]]), np.zeros(1), p)


@settings(max_examples=80)
@given(st.integers(0, 6), st.floats(0.05, 3), st.floats(-3, 3), st.floats(-2, 2))
def test_wave_speed_bounds_spectrum(n, h, u, a1):
    p = ModelParams(n_moments=n)
    eig = np.linalg.eigvals(dense_transport_matrix(h, u, a1, n, p.g))
    bound = max_wave_speed(np.array([[h, h * u]]), np.array([a1]), p)
    assert np.max(np.abs(eig)) <= bound * (1 + 1e-10)


def test_time_step_clipping():
    p = ModelParams(cfl=0.5)
    grid = Grid(10)
    U = np.tile([1.0, 0.0], (10, 1))
    ts = time_step(U, np.zeros(10), grid, p)
    assert ts.dt == pytest.approx(0.5 * 0.2 / np.sqrt(p.g))
    assert time_step(U, np.zeros(10), grid, p, remaining=1e-5).dt == 1e-5


@pytest.mark.parametrize("bc", BCS)
def test_constant_state_is_fixed_point(bc):
    p = ModelParams(n_moments=3)
    grid = Grid(8, bc=bc)
    U = np.tile([1.3, 0.4], (8, 1))
    V = np.tile([0.1, -0.05, 0.02], (8, 1))
    Ut, Vt = transport_step(U, V, 1e-3, grid, p)
    np.testing.assert_allclose(Ut, U, rtol=1e-15)
    np.testing.assert_allclose(Vt, V, rtol=1e-15)


@settings(max_examples=30)
@given(seeds, st.sampled_from(BCS))
def test_macro_step_matches_swe_oracle_without_moments(seed, bc):
    rng = np.random.default_rng(seed)
    U, _ = random_state(rng, 12, 0)
    for n in (0, 3):
        p = ModelParams(n_moments=n)
        grid = Grid(12, bc=bc)
        Ut = macro_transport_step(U, np.zeros((12, n)), 1e-3, grid, p)
        np.testing.assert_allclose(Ut, dense_pc_step(U, 1e-3, grid.dx, bc, p.g), atol=1e-14)


@settings(max_examples=30)
@given(seeds)
def test_periodic_mass_is_conserved(seed):
    rng = np.random.default_rng(seed)
    U, V = random_state(rng, 30, 5)
    p = ModelParams(n_moments=5)
    grid = Grid(30, bc="periodic")
    m0 = U[:, 0].sum()
    for _ in range(20):
        dt = time_step(U, V[:, 0] / U[:, 0], grid, p).dt
        U, V = transport_step(U, V, dt, grid, p)
    assert abs(U[:, 0].sum() - m0) <= 1e-14 * m0


def test_smooth_wave_single_step_mass():
    from hswme.model import initial_condition
    p = ModelParams(n_moments=6)
    grid = Grid(100, bc="periodic")
    U, V = initial_condition("smooth-wave", grid, p)
    dt = time_step(U, V[:, 0] / U[:, 0], grid, p).dt
    Ut = macro_transport_step(U, V, dt, grid, p)
    assert abs(Ut[:, 0].sum() - U[:, 0].sum()) <= 1e-14 * U[:, 0].sum()


@given(seeds)
def test_outflow_mass_change_is_boundary_flux(seed):
    # zero-gradient ghosts: the Lax-Friedrichs average telescopes, only the
    # boundary momenta move mass across the domain edges
    rng = np.random.default_rng(seed)
    U, V = random_state(rng, 20, 3)
    p = ModelParams(n_moments=3)
    grid = Grid(20, bc="outflow")
    dt = 1e-3
    Ut = macro_transport_step(U, V, dt, grid, p)
    change = (Ut[:, 0].sum() - U[:, 0].sum()) * grid.dx
    # round-off of two sums of 20 O(1) terms, times dx
    assert change == pytest.approx(-dt * (U[-1, 1] - U[0, 1]), abs=1e-14 * U[:, 0].sum() * grid.dx)


@pytest.mark.parametrize("bc", BCS)
def test_micro_zero_stays_zero(bc):
    rng = np.random.default_rng(0)
    U, _ = random_state(rng, 10, 0)
    p = ModelParams(n_moments=4)
    grid = Grid(10, bc=bc)
    V = np.zeros((10, 4))
    Ut = macro_transport_step(U, V, 1e-3, grid, p)
    assert not micro_transport_step(Ut, U, V, 1e-3, grid, p).any()


@settings(max_examples=40)
@given(seeds, st.sampled_from(BCS))
def test_micro_step_matches_dense_oracle(seed, bc):
    rng = np.random.default_rng(seed)
    U, V = random_state(rng, 12, 4)
    p = ModelParams(n_moments=4)
    grid = Grid(12, bc=bc)
    dt = 1e-3
    Ut = macro_transport_step(U, V, dt, grid, p)
    got = micro_transport_step(Ut, U, V, dt, grid, p)
    np.testing.assert_allclose(got, dense_micro_step(Ut, U, V, dt, grid.dx, bc, p.g), atol=1e-13)
    # the step is V + dt F(V) with the semi-discrete right-hand side
    rhs = micro_transport_rhs(Ut, V[:, 0] / U[:, 0], V, dt, grid)
    np.testing.assert_allclose(got, V + dt * rhs, atol=1e-13)


@settings(max_examples=40)
@given(seeds, st.sampled_from(BCS), st.integers(1, 6))
def test_simultaneous_staging_equals_full_system_step(seed, bc, n):
    rng = np.random.default_rng(seed)
    U, V = random_state(rng, 12, n)
    p = ModelParams(n_moments=n)
    grid = Grid(12, bc=bc)
    Ut, Vt = transport_step(U, V, 1e-3, grid, p, staging="simultaneous")
    Q = dense_pc_step(np.concatenate([U, V], axis=1), 1e-3, grid.dx, bc, p.g)
    np.testing.assert_allclose(Ut, Q[:, :2], atol=1e-13)
    np.testing.assert_allclose(Vt, Q[:, 2:], atol=1e-13)


def test_transport_errors():
    p = ModelParams(n_moments=2)
    grid = Grid(4)
    U = np.tile([1.0, 0.0], (4, 1))
    with pytest.raises(ValueError):
        micro_transport_step(U, U, np.zeros((4, 3)), 1e-3, grid, p)
    with pytest.raises(ValueError):
        transport_step(U, np.zeros((4, 2)), 1e-3, grid, p, staging="other")
    bad = U.copy()
    bad[2, 0] = -0.1
    with pytest.raises(DepthError):
        macro_transport_update(bad, np.zeros(4), 1e-3, grid, p)
    # a step far beyond the CFL limit drains a cell
    steep = np.array([[0.01, -1.0], [1.0, 0.0], [0.01, 1.0], [1.0, 0.0]])
    with pytest.raises(DepthError):
        macro_transport_update(steep, np.zeros(4), 1.0, grid, p)
