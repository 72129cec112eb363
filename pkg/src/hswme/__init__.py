"""Shallow water moment equations with full-order, POD-Galerkin and
dynamical low-rank solvers for the moment block."""
from .config import PRESETS, RunConfig, override, preset
from .dlra import LowRankFactors, dlra_run
from .errors import DepthError, HSWMEError, SingularSystemError, SolverAbort
from .fom import RunReport, Trajectory, relative_l2_error, run_hswme, run_swe, simulate
from .model import BoundaryCondition, Case, Grid, ModelParams, initial_condition
from .pod import ReducedBasis, ReducedOperators, build_reduced_operators, pod_rom_run, pod_train

__version__ = "0.1.0"
