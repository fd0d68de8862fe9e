"""
Pulsating heart region on a chest-shaped domain
===============================================

A finite element forward model produces 32 frames where a conductive "heart"
disk pulsates by 5%.  Every frame is reconstructed against the first one
with the per-frame (batched) schedule.  At its peak the pulse changes the
voltages by about 0.06%, so the noise level is kept at 1e-4.
"""

import numpy as np

from fastdbar.io import rasterize, write_ppm
from fastdbar.pipeline import ReconConfig, reconstruct_session
from fastdbar.scenario import simulate

heart = {"center": [-0.15, 0.05], "radius": 0.22, "sigma": 2.0}
session = simulate({
    "geometry": "chest",
    "frames": 32,
    "phantom": {"type": "regions", "regions": [heart]},
    "pulse": 0.05,
    "period": 16,
    "reference": "frame",
    "noise": 1e-4,
    "seed": 11,
})
print(len(session), "frames on", session.geometry_name)

seq = reconstruct_session(session, ReconConfig(schedule="per_frame"))

###############################################################################
# The heart-region mean follows the pulse; the far field stays flat

z = seq.zmesh
near = np.abs(z - complex(*heart["center"])) < 0.15
far = np.abs(z - complex(*heart["center"])) > 0.6
for q in range(0, len(seq), 4):
    print(f"frame {seq.indices[q]:2d}: heart {seq.sigma[q, near].mean():.4f}  far {seq.sigma[q, far].mean():.4f}")

# the frame a quarter period in carries the largest change; shown on a tight scale
geom = session.domain()
write_ppm("chest_frame_04.ppm", rasterize(z, seq.sigma[3], geom, size=128, delta=0.05))
print(f"{seq.timings['total_s']:.2f} s total, {seq.s_per_frame:.3f} s/frame")
