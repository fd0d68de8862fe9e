"""
Speedup against Amdahl's law
============================

Times both schedules on the coarse mesh for a range of worker counts and
compares the measured speedup with 1 / ((1 - p) + p / n), where p is the
parallel-loop share of the single-worker runtime.
"""

import os

from fastdbar.bench import amdahl_speedup, benchmark, group, loop_fraction_p, write_csv, write_svg
from fastdbar.pipeline import ReconConfig
from fastdbar.scenario import simulate

session = simulate({"frames": 9, "reference": "homogeneous", "noise": 1e-3, "seed": 5})
cores = sorted({1, 2, os.cpu_count() or 1})
print("hardware threads:", os.cpu_count(), "worker counts:", cores)

rows = benchmark(session, ReconConfig(), cores, repeats=1, meshes=("coarse",))

for (sched, mesh), rs in group(rows).items():
    p = loop_fraction_p(rs)
    print(f"\n{sched} on the {mesh} mesh, loop fraction p = {p:.3f} (limit {1 / (1 - p):.1f}x)")
    for r in rs:
        print(f"  {r.cores} workers: {r.s_per_frame:.3f} s/frame, speedup {r.speedup:.2f}, Amdahl {amdahl_speedup(p, r.cores):.2f}")

write_csv("bench.csv", rows)
for sched in ("per_z", "per_frame"):
    write_svg(f"speedup_{sched}.svg", rows, sched)
