"""Full-order time loop and trajectory bookkeeping.

One step is macro transport, micro transport, macro friction, micro
friction.  The macro half is always computed here from the full (h, hu)
state; only the micro half is delegated to a backend.  The full-order
model, the POD-Galerkin model and the low-rank integrator differ only in
the backend they plug in, so mass conservation is shared by construction.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, override
from .errors import DepthError, SolverAbort
from .friction import FrictionSolver, macro_friction_update
from .model import Grid, ModelParams, initial_condition
from .transport import macro_transport_update, micro_transport_step, time_step


@dataclass
class Trajectory:
    """Recorded frames of one run.

    ``U`` has shape (n_frames, n_cells, 2) and ``V`` (n_frames, n_cells, N).
    """

    times: np.ndarray
    U: np.ndarray
    V: np.ndarray
    params: ModelParams
    grid: Grid
    case: str = ""
    stride: int = 1
    solver: str = "fom"

    @property
    def final_U(self) -> np.ndarray:
        return self.U[-1]

    @property
    def final_V(self) -> np.ndarray:
        return self.V[-1]

    def __len__(self):
        return len(self.times)


@dataclass
class RunReport:
    n_steps: int
    wall_clock: dict
    times: np.ndarray
    mass: np.ndarray
    momentum: np.ndarray
    moment4: np.ndarray | None = None
    dts: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)


class FullMicro:
    """Micro backend holding the full (n_cells, N) moment block."""

    def __init__(self, V: np.ndarray, grid: Grid, params: ModelParams, solver: FrictionSolver | None = None):
        self.V = np.array(V, dtype=float)
        self.grid = grid
        self.params = params
        n = params.n_moments
        self.solver = solver if solver is not None or n == 0 else FrictionSolver(params)

    def first_moment(self):
        return self.V[:, 0] if self.V.shape[1] else np.zeros(self.V.shape[0])

    def moment_sum(self):
        return self.V.sum(axis=1)

    def transport(self, U_tilde, U_old, dt):
        if self.V.shape[1]:
            self.V = micro_transport_step(U_tilde, U_old, self.V, dt, self.grid, self.params)

    def friction(self, U_new, dt):
        if self.V.shape[1]:
            h = U_new[:, 0]
            self.V = self.solver.solve(h, U_new[:, 1] / h, self.V, dt)

    def full(self):
        return self.V

    def is_finite(self):
        return bool(np.isfinite(self.V).all())


def _conservation(U, V, dx):
    m4 = V[:, 3].sum() * dx if V.shape[1] >= 4 else np.nan
    return U[:, 0].sum() * dx, U[:, 1].sum() * dx, m4


def simulate(U0, backend, grid: Grid, params: ModelParams, T: float, stride: int = 1,
             output_times=(), keep_frames: bool = True, on_frame=None, case: str = "",
             solver: str = "fom", max_steps: int | None = None):
    """Advance (U, backend) to time T.

    Parameters
    ----------
    stride : int
        Record every ``stride``-th step; the initial and final frames are
        always recorded.
    output_times : sequence of float
        Times the stepping must hit exactly; a frame is recorded at each.
    keep_frames : bool
        If False only the final frame is stored in the trajectory (the
        conservation series still covers every recorded time).
    on_frame : callable, optional
        Called as ``on_frame(t, U, V)`` for every recorded frame.
    """
    U = np.array(U0, dtype=float)
    targets = sorted(float(t) for t in output_times if 0 < t < T) + [float(T)]
    dx = grid.dx
    times, Us, Vs, series = [], [], [], []
    clock = {"transport": 0.0, "friction": 0.0, "record": 0.0}

    def record(t):
        t0 = time.perf_counter()
        V = backend.full()
        times.append(t)
        series.append(_conservation(U, V, dx))
        if keep_frames:
            Us.append(U.copy())
            Vs.append(np.array(V, copy=True))
        if on_frame is not None:
            on_frame(t, U, V)
        clock["record"] += time.perf_counter() - t0

    start = time.perf_counter()
    record(0.0)
    t = 0.0
    step = 0
    dts = []
    ti = 0
    while t < T:
        if max_steps is not None and step >= max_steps:
            raise SolverAbort(f"step limit {max_steps} reached at t={t}", step=step)
        target = targets[ti]
        try:
            h = U[:, 0]
            dt, _ = time_step(U, backend.first_moment() / h, grid, params, target - t)
            hit = dt >= target - t
            t0 = time.perf_counter()
            U_tilde = macro_transport_update(U, backend.first_moment(), dt, grid, params)
            backend.transport(U_tilde, U, dt)
            t1 = time.perf_counter()
            U = macro_friction_update(U_tilde, backend.moment_sum(), dt, params)
            backend.friction(U, dt)
            clock["transport"] += t1 - t0
            clock["friction"] += time.perf_counter() - t1
        except DepthError as exc:
            raise SolverAbort(f"step {step + 1}: {exc}", step=step + 1, cell=exc.cell) from exc
        step += 1
        dts.append(dt)
        if not np.isfinite(U).all() or not backend.is_finite():
            bad = ~np.isfinite(U).all(axis=1)
            cell = int(np.argmax(bad)) if bad.any() else None
            raise SolverAbort(f"non-finite state after step {step}", step=step, cell=cell)
        if hit:
            t = target
            ti += 1
            record(t)
        else:
            t = t + dt
            if step % stride == 0:
                record(t)
    clock["total"] = time.perf_counter() - start
    clock["stepping"] = clock["total"] - clock["record"]

    if not keep_frames:
        Us.append(U.copy())
        Vs.append(np.array(backend.full(), copy=True))
    ser = np.array(series)
    n_mom = params.n_moments
    report = RunReport(
        n_steps=step, wall_clock=clock, times=np.array(times),
        mass=ser[:, 0], momentum=ser[:, 1], moment4=ser[:, 2] if n_mom >= 4 else None,
        dts=np.array(dts),
    )
    traj_times = np.array(times) if keep_frames else np.array([times[-1]])
    traj = Trajectory(traj_times, np.array(Us), np.array(Vs).reshape(len(Us), grid.n_cells, n_mom),
                      params, grid, case, stride, solver)
    return traj, report


def run_hswme(config: RunConfig, keep_frames: bool = True, on_frame=None):
    params, grid = config.params, config.grid
    U0, V0 = initial_condition(config.case, grid, params)
    backend = FullMicro(V0, grid, params)
    return simulate(U0, backend, grid, params, config.T, config.stride, config.output_times,
                    keep_frames, on_frame, config.case, "fom")


def run_swe(config: RunConfig, keep_frames: bool = True, on_frame=None):
    """The same splitting with the 2x2 block only (N = 0)."""
    config = override(config, n_moments=0)
    params, grid = config.params, config.grid
    U0, V0 = initial_condition(config.case, grid, params)
    backend = FullMicro(V0, grid, params)
    return simulate(U0, backend, grid, params, config.T, config.stride, config.output_times,
                    keep_frames, on_frame, config.case, "swe")


def relative_l2_error(A: Trajectory, B: Trajectory) -> float:
    """Relative L2 error of (h, hu) at the final time, B is the reference."""
    if A.grid != B.grid:
        raise ValueError(f"grid mismatch: {A.grid} vs {B.grid}")
    if abs(A.times[-1] - B.times[-1]) > 1e-12:
        raise ValueError(f"final times differ: {A.times[-1]} vs {B.times[-1]}")
    return macro_relative_error(A.final_U, B.final_U)


def macro_relative_error(U: np.ndarray, U_ref: np.ndarray) -> float:
    ref = np.sqrt(np.sum(U_ref**2))
    return float(np.sqrt(np.sum((U - U_ref) ** 2)) / ref)
