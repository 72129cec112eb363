"""Command line tools, file formats and CSV reports."""
from .io import load_basis, load_trajectory, read_frame, save_basis, save_trajectory
from .reports import conservation_report, export_profiles
from .runner import bench, rank_sweep, run_config
