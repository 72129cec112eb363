"""CSV reports: conservation series, velocity profiles, rank sweeps, timings.

Every float is written with 17 significant digits so that the text round
trips to the same double.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from ..fom import RunReport, Trajectory
from ..model import reconstruct_velocity


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, text: str) -> None:
    with open(path, "w", newline="") as f:
        f.write(text)


def read_csv(text: str) -> tuple[list, np.ndarray]:
    """Header and float table of a numeric CSV."""
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def relative_deviation(series: np.ndarray) -> np.ndarray:
    """(q(t) - q(0)) / |q(0)|; plain differences when q(0) = 0."""
    series = np.asarray(series, dtype=float)
    ref = abs(series[0])
    return (series - series[0]) / ref if ref > 0 else series - series[0]


def conservation_table(times, mass, momentum, moment4=None) -> str:
    cols = {"t": times, "mass": mass, "momentum": momentum}
    if moment4 is not None:
        cols["moment4"] = moment4
    names = list(cols)
    for name in names[1:]:
        cols[f"{name}_rel_dev"] = relative_deviation(cols[name])
    return to_csv(list(cols), zip(*cols.values()))


def conservation_series(traj: Trajectory):
    dx = traj.grid.dx
    mass = traj.U[:, :, 0].sum(axis=1) * dx
    momentum = traj.U[:, :, 1].sum(axis=1) * dx
    m4 = traj.V[:, :, 3].sum(axis=1) * dx if traj.V.shape[2] >= 4 else None
    return mass, momentum, m4


def conservation_report(traj: Trajectory) -> str:
    """t, total mass, momentum and h*alpha_4 (N >= 4), each with its relative deviation."""
    if len(traj) < 2:
        raise ValueError("conservation report needs at least two frames")
    return conservation_table(traj.times, *conservation_series(traj))


def conservation_report_from_run(report: RunReport) -> str:
    """Same table from the series a run records even when frames are not kept."""
    return conservation_table(report.times, report.mass, report.momentum, report.moment4)


def export_profiles(traj: Trajectory, positions, zetas, frame: int = -1) -> str:
    """Vertical velocity profiles u(zeta) in the cells containing ``positions``."""
    zetas = np.asarray(zetas, dtype=float)
    grid = traj.grid
    cols = [zetas]
    header = ["zeta"]
    U, V = traj.U[frame], traj.V[frame]
    for x in positions:
        j = grid.cell_index(float(x))
        h = U[j, 0]
        cols.append(reconstruct_velocity(U[j, 1] / h, V[j] / h, zetas) * np.ones_like(zetas))
        header.append(f"u(x={float(x):.17g})")
    return to_csv(header, zip(*cols))


def run_summary(report: RunReport, extra: dict | None = None) -> str:
    row = {"n_steps": report.n_steps, **{f"{k}_s": v for k, v in report.wall_clock.items()}}
    row.update(extra or {})
    return to_csv(list(row), [list(row.values())])


def sweep_table(rows) -> str:
    """Rows of (rank, rel_l2_error, wall_time_s, speedup)."""
    return to_csv(["rank", "rel_l2_error", "wall_time_s", "speedup"], rows)


BENCH_METHODS = ("FOM", "DLRA", "SWE", "POD-online", "POD-offline")


def bench_table(times: dict) -> str:
    """Median wall times in the order FOM, DLRA, SWE, POD-online, POD-offline."""
    fom = times["FOM"]
    return to_csv(["method", "wall_time_s", "speedup_vs_fom"],
                  [(m, times[m], fom / times[m]) for m in BENCH_METHODS if m in times])
