"""Dynamical low-rank approximation needs no training run.

The moment block V (cells x moments) is kept as X S W^T with both bases
evolving in time.  Each step updates the spatial basis, then the moment
basis, then the small coefficient matrix.  Error falls quickly with rank.
"""
from hswme import preset
from hswme.harness.runner import rank_sweep
from hswme.harness.reports import sweep_table

cfg = preset("paper-dam-break", nx=500, n_moments=50, T=0.2, solver="dlra")
rows = rank_sweep(cfg, [1, 2, 3, 5, 8, 12])
print(sweep_table(rows))
