"""Command line interface: ``hswme run|pod-train|sweep|compare|bench|export``.

Configuration comes from a preset or JSON file, then individual flags
override single fields.  Exit codes: 0 success, 2 configuration error,
3 solver abort, 4 file error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ..config import PRESETS, RunConfig, load_config, override, preset
from ..errors import HSWMEError, SolverAbort
from ..fom import relative_l2_error
from ..pod import pod_train
from . import io as fio
from . import reports
from .runner import bench, rank_sweep, run_config

EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 2, 3, 4


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _add_config_args(p: argparse.ArgumentParser, solver: bool = True) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
    g.add_argument("--config", metavar="FILE", help="start from a JSON config file")
    g.add_argument("--case", choices=["dam-break", "smooth-wave"])
    if solver:
        g.add_argument("--solver", choices=["fom", "swe", "pod", "dlra"])
    g.add_argument("--nx", type=int, help="number of cells")
    g.add_argument("--nmoments", "-N", type=int, dest="n_moments", help="number of moments")
    g.add_argument("--rank", "-r", type=int)
    g.add_argument("--nu", type=float, help="viscosity")
    g.add_argument("--lam", "--lambda", type=float, dest="lam", help="slip length")
    g.add_argument("--g", type=float, help="gravitational acceleration")
    g.add_argument("--cfl", type=float)
    g.add_argument("--bc", choices=["outflow", "periodic"])
    g.add_argument("--T", "-T", type=float, dest="T", help="final time")
    g.add_argument("--stride", type=int, help="record every k-th step")
    g.add_argument("--train-nu", type=_floats, help="training viscosities, e.g. 0.1,10")
    g.add_argument("--output-times", type=_floats, help="times to hit exactly")
    g.add_argument("--friction-index", choices=["dissipative", "as-printed"])
    g.add_argument("--output-dir", "-o", help="directory for output files")


_CONFIG_FIELDS = ("case", "solver", "nx", "n_moments", "rank", "nu", "lam", "g", "cfl", "bc", "T",
                  "stride", "train_nu", "output_times", "friction_index", "output_dir")


def config_from_args(args) -> RunConfig:
    if args.preset and args.config:
        raise ValueError("give either --preset or --config, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        cfg = RunConfig()
    return override(cfg, **{k: getattr(args, k, None) for k in _CONFIG_FIELDS})


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = config_from_args(args)
    basis = fio.load_basis(args.basis) if args.basis else None
    traj, rep = run_config(cfg, basis, keep_frames=not args.no_trajectory)
    stem = args.name or f"{cfg.case}-{cfg.solver}"
    with open(_out(cfg, stem + ".config.json"), "w") as f:
        f.write(cfg.to_json() + "\n")
    if not args.no_trajectory:
        fio.save_trajectory(_out(cfg, stem + ".traj"), traj)
    reports.write_csv(_out(cfg, stem + ".conservation.csv"), reports.conservation_report_from_run(rep))
    reports.write_csv(_out(cfg, stem + ".report.csv"), reports.run_summary(rep, {"t_final": traj.times[-1]}))
    _say(f"{cfg.solver}: {rep.n_steps} steps in {rep.wall_clock['stepping']:.3f} s -> {cfg.output_dir}/{stem}.*")
    return 0


def cmd_pod_train(args) -> int:
    cfg = config_from_args(args)
    basis = pod_train(cfg)
    path = args.out or _out(cfg, f"{cfg.case}-r{cfg.rank}.basis")
    fio.save_basis(path, basis)
    _say(f"basis N={basis.n_moments} r={basis.r} -> {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    basis = fio.load_basis(args.basis) if args.basis else None
    rows = rank_sweep(cfg, args.ranks, basis, args.workers)
    text = reports.sweep_table(rows)
    path = args.out or _out(cfg, f"{cfg.case}-{cfg.solver}-sweep.csv")
    reports.write_csv(path, text)
    sys.stdout.write(text)
    return 0


def cmd_compare(args) -> int:
    a = fio.load_trajectory(args.a)
    b = fio.load_trajectory(args.b)
    print(repr(relative_l2_error(a, b)))
    return 0


def cmd_bench(args) -> int:
    cfg = config_from_args(args)
    times = bench(cfg, args.repeats)
    text = reports.bench_table(times)
    path = args.out or _out(cfg, f"{cfg.case}-bench.csv")
    reports.write_csv(path, text)
    sys.stdout.write(text)
    return 0


def cmd_export(args) -> int:
    traj = fio.load_trajectory(args.trajectory)
    if args.profiles is None and not args.conservation:
        raise ValueError("nothing to export: give --profiles and/or --conservation")
    stem = os.path.splitext(args.trajectory)[0]
    if args.profiles is not None:
        zetas = np.linspace(0.0, 1.0, args.nzeta)
        text = reports.export_profiles(traj, args.profiles, zetas, args.frame)
        reports.write_csv(stem + ".profiles.csv", text)
        _say(f"profiles -> {stem}.profiles.csv")
    if args.conservation:
        reports.write_csv(stem + ".conservation.csv", reports.conservation_report(traj))
        _say(f"conservation -> {stem}.conservation.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hswme", description="Shallow water moment solvers and reduced models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one solver, write trajectory and CSV reports")
    _add_config_args(p)
    p.add_argument("--basis", help="POD basis file (otherwise trained on the fly)")
    p.add_argument("--name", help="output file stem (default CASE-SOLVER)")
    p.add_argument("--no-trajectory", action="store_true", help="skip the trajectory file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("pod-train", help="train and store a POD basis")
    _add_config_args(p, solver=False)
    p.add_argument("--out", help="basis file path")
    p.set_defaults(func=cmd_pod_train)

    p = sub.add_parser("sweep", help="ROM error and wall time over a list of ranks")
    _add_config_args(p)
    p.add_argument("--ranks", type=_ints, required=True, help="e.g. 2,5,10")
    p.add_argument("--basis", help="POD basis file of at least the largest rank")
    p.add_argument("--workers", type=int, help="worker threads (capped by HSWME_THREADS)")
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="relative L2 error of (h, hu) at the final time, B is the reference")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="median wall times of FOM, DLRA, SWE and POD")
    _add_config_args(p, solver=False)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export", help="CSV export from a trajectory file")
    p.add_argument("trajectory")
    p.add_argument("--profiles", type=_floats, help="x positions for velocity profiles")
    p.add_argument("--nzeta", type=int, default=101, help="number of zeta samples")
    p.add_argument("--frame", type=int, default=-1)
    p.add_argument("--conservation", action="store_true")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverAbort as exc:
        _say(f"error: solver aborted: {exc}")
        return EXIT_SOLVER
    except OSError as exc:
        _say(f"error: {exc}")
        return EXIT_IO
    except (ValueError, KeyError, TypeError, json.JSONDecodeError, HSWMEError) as exc:
        _say(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
