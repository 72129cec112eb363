"""Mass is conserved to round-off by the full and both reduced models.

All three share the update of water height and momentum, so the total water
volume only changes by floating-point summation error.  The reduced models
also track the total momentum of the full model closely.
"""
import numpy as np

from hswme import preset, run_hswme
from hswme.dlra import dlra_run
from hswme.pod import pod_rom_run, pod_train

outputs = tuple(np.round(np.arange(1, 11) * 0.02, 2))
cfg = preset("paper-smooth-wave", nx=400, n_moments=20, T=0.2, rank=5, output_times=outputs,
             stride=10**9)

_, fom = run_hswme(cfg, keep_frames=False)
_, pod = pod_rom_run(cfg, pod_train(cfg), keep_frames=False)
_, dlra = dlra_run(cfg, keep_frames=False)

print("   t    mass drift (FOM, POD, DLRA)        momentum   POD dev   DLRA dev")
for i, t in enumerate(fom.times):
    drift = [abs(r.mass[i] / r.mass[0] - 1) for r in (fom, pod, dlra)]
    dev = [abs(r.momentum[i] / fom.momentum[i] - 1) for r in (pod, dlra)]
    print(f" {t:4.2f}  " + " ".join(f"{d:9.1e}" for d in drift)
          + f"   {fom.momentum[i]:.6f}  {dev[0]:.1e}   {dev[1]:.1e}")
