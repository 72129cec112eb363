"""Solver dispatch, rank sweeps and timing benchmarks (library side of the CLI)."""
from __future__ import annotations

import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor

from ..config import RunConfig, override
from ..dlra import dlra_run
from ..fom import relative_l2_error, run_hswme, run_swe
from ..pod import ReducedBasis, pod_rom_run, pod_train


def run_config(cfg: RunConfig, basis: ReducedBasis | None = None, keep_frames: bool = True, on_frame=None):
    """Run ``cfg.solver``; a POD run without ``basis`` trains one first."""
    if cfg.solver == "fom":
        return run_hswme(cfg, keep_frames, on_frame)
    if cfg.solver == "swe":
        return run_swe(cfg, keep_frames, on_frame)
    if cfg.solver == "pod":
        if basis is None:
            basis = pod_train(cfg)
        elif basis.r > cfg.rank:
            basis = basis.truncate(cfg.rank)
        return pod_rom_run(cfg, basis, keep_frames=keep_frames, on_frame=on_frame)
    return dlra_run(cfg, keep_frames=keep_frames, on_frame=on_frame)


def worker_count(n_jobs: int) -> int:
    """Worker threads for ``n_jobs`` runs, capped by HSWME_THREADS."""
    cap = os.environ.get("HSWME_THREADS")
    workers = os.cpu_count() or 1
    if cap:
        try:
            workers = min(workers, int(cap))
        except ValueError:
            raise ValueError(f"HSWME_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(workers, n_jobs))


def rank_sweep(cfg: RunConfig, ranks, basis: ReducedBasis | None = None, workers: int | None = None):
    """Final-time error and stepping time of the ROM in ``cfg.solver`` for each rank.

    The full-model reference runs once.  For POD one basis of the largest
    rank is trained and truncated, since POD bases are nested.  Returns rows
    (rank, rel_l2_error, wall_time_s, speedup) sorted by rank.
    """
    if cfg.solver not in ("pod", "dlra"):
        raise ValueError("sweep needs solver pod or dlra")
    ranks = sorted({int(r) for r in ranks})
    if not ranks or ranks[0] < 1:
        raise ValueError("ranks must be positive")
    ref, ref_rep = run_hswme(override(cfg, solver="fom"), keep_frames=False)
    if cfg.solver == "pod" and basis is None:
        basis = pod_train(cfg, r=ranks[-1])

    def one(r):
        traj, rep = run_config(override(cfg, rank=r), basis, keep_frames=False)
        t = rep.wall_clock["stepping"]
        return r, relative_l2_error(traj, ref), t, ref_rep.wall_clock["stepping"] / t

    n = workers or worker_count(len(ranks))
    if n == 1:
        return [one(r) for r in ranks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(one, ranks))


def bench(cfg: RunConfig, repeats: int = 3, methods=None) -> dict:
    """Median wall time of each method over ``repeats`` runs.

    Solver timings cover the stepping loop only (no set-up, recording or
    file output).  POD-offline is the training time: one full-model run per
    training viscosity plus the basis extraction.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    methods = methods or ("FOM", "DLRA", "SWE", "POD-online", "POD-offline")
    basis = None
    out = {}

    def median(fn):
        return statistics.median(fn() for _ in range(repeats))

    def stepping(c, b=None):
        return run_config(c, b, keep_frames=False)[1].wall_clock["stepping"]

    def offline():
        nonlocal basis
        t0 = time.perf_counter()
        basis = pod_train(cfg)
        return time.perf_counter() - t0

    for m in methods:
        if m == "FOM":
            out[m] = median(lambda: stepping(override(cfg, solver="fom")))
        elif m == "DLRA":
            out[m] = median(lambda: stepping(override(cfg, solver="dlra")))
        elif m == "SWE":
            out[m] = median(lambda: stepping(override(cfg, solver="swe")))
        elif m == "POD-offline":
            out[m] = median(offline)
        elif m == "POD-online":
            if basis is None:
                basis = pod_train(cfg)
            out[m] = median(lambda: stepping(override(cfg, solver="pod"), basis))
        else:
            raise ValueError(f"unknown bench method {m!r}")
    if "FOM" not in out:
        raise ValueError("bench needs the FOM timing as reference")
    return out
