"""Benchmark harness: timed runs per schedule, mesh and worker count, plus Amdahl fits.

Total runtime is measured from voltage ingestion (setup phase included) to
the last image; worker start-up is excluded.  Loop runtime covers only the
parallel region of the schedule.
"""

from __future__ import annotations

import csv
import os
import statistics
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InputError
from .pipeline import SCHEDULES, WorkerPool, prepare, reconstruct, select_frames
from .zmesh import get_zmesh

CSV_HEADER = ["schedule", "mesh", "cores", "total_s", "loop_s", "s_per_frame", "speedup"]
TIMING_NOTE = "timed from voltage ingestion to image (setup included, worker start-up excluded)"


def amdahl_speedup(p, n):
    """Amdahl bound 1 / ((1 - p) + p / n) for parallel fraction ``p`` on ``n`` workers."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InputError(f"parallel fraction must lie in [0, 1], got {p}")
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise InputError("worker count must be >= 1")
    s = 1.0 / ((1.0 - p) + p / n)
    return float(s) if s.ndim == 0 else s


def fit_p(cores, speedups):
    """Least-squares parallel fraction for measured speedups over the Amdahl family."""
    n = np.asarray(cores, dtype=float)
    s = np.asarray(speedups, dtype=float)
    if n.shape != s.shape or n.size == 0:
        raise InputError("need matching, non-empty worker counts and speedups")
    res = minimize_scalar(lambda p: np.sum((amdahl_speedup(p, n) - s) ** 2), bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def clamp_cores(cores, available=None):
    """Drop duplicates, sort, and clamp requests above the hardware thread count."""
    available = available or os.cpu_count() or 1
    out = []
    for c in cores:
        c = int(c)
        if c < 1:
            raise InputError(f"core counts must be >= 1, got {c}")
        if c > available:
            warnings.warn(f"{c} cores requested but only {available} available; clamped", RuntimeWarning, stacklevel=2)
            c = available
        out.append(c)
    return sorted(set(out))


@dataclass
class TimingReport:
    schedule: str
    mesh: str
    n_points: int
    cores: int
    total_s: float
    loop_s: float
    s_per_frame: float
    speedup: float = 1.0
    n_frames: int = 0
    repeats: int = 1

    @property
    def loop_fraction(self):
        return self.loop_s / self.total_s if self.total_s > 0 else 0.0

    def row(self):
        return [self.schedule, self.mesh, self.cores, f"{self.total_s:.6f}", f"{self.loop_s:.6f}", f"{self.s_per_frame:.6f}", f"{self.speedup:.4f}"]


def timed_run(session, geom, config, zmesh=None):
    """One timed reconstruction of every selected frame; returns the ReconSequence."""
    frames, idx = select_frames(session, config.include_reference)
    t0 = time.perf_counter()
    setup = prepare(geom, session.reference, config, session.skip, session.amplitude, zmesh)
    setup_s = time.perf_counter() - t0
    with WorkerPool(setup) as pool:
        # warm the workers so start-up stays out of the timed region
        pool.map(_noop, range(pool.workers))
        t1 = time.perf_counter()
        seq = reconstruct(frames, setup, idx, pool=pool)
        run_s = time.perf_counter() - t1
    seq.timings.update(setup_s=setup_s, total_s=setup_s + run_s)
    return seq


def _noop(setup, item):
    return item


def benchmark(session, config, worker_counts, repeats=3, meshes=("coarse",), schedules=SCHEDULES, geom=None):
    """Median-of-``repeats`` timings for each schedule, mesh and worker count.

    A single-worker run is always included so speedups are relative to T(1).
    """
    geom = geom or session.domain()
    counts = sorted(set([1] + [int(c) for c in worker_counts]))
    reports = []
    for sched in schedules:
        for mesh in meshes:
            z = get_zmesh(geom, mesh)
            label = mesh if isinstance(mesh, str) and mesh in ("coarse", "medium", "fine") else f"user{len(z)}"
            rows = []
            for n in counts:
                cfg = replace(config, schedule=sched, workers=n)
                runs = [timed_run(session, geom, cfg, z) for _ in range(max(int(repeats), 1))]
                total = statistics.median(r.timings["total_s"] for r in runs)
                loop = statistics.median(r.timings["loop_s"] for r in runs)
                nf = len(runs[0])
                rows.append(TimingReport(sched, label, len(z), n, total, loop, total / nf, n_frames=nf, repeats=len(runs)))
            base = rows[0].total_s
            for r in rows:
                r.speedup = base / r.total_s
            reports.extend(rows)
    return reports


def group(reports):
    out = {}
    for r in reports:
        out.setdefault((r.schedule, r.mesh), []).append(r)
    return out


def loop_fraction_p(rows):
    """Parallel fraction estimated from the single-worker loop/total ratio."""
    one = [r for r in rows if r.cores == 1]
    return float(np.clip(one[0].loop_fraction, 0.0, 1.0)) if one else float("nan")


def amdahl_check(rows, slack=0.10):
    """True when no measured speedup exceeds the loop-fraction Amdahl curve by more than ``slack``."""
    p = loop_fraction_p(rows)
    return all(r.speedup <= (1.0 + slack) * amdahl_speedup(p, r.cores) for r in rows)


def peak_workers(rows):
    """Worker count with the best speedup (ties go to the smallest count)."""
    best = max(rows, key=lambda r: (round(r.speedup, 6), -r.cores))
    return best.cores


def write_csv(path, reports):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in reports:
            w.writerow(r.row())


def read_csv(path):
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != CSV_HEADER:
            raise InputError(f"{path}: unexpected benchmark header {rd.fieldnames}")
        out = []
        for row in rd:
            out.append(
                TimingReport(
                    schedule=row["schedule"],
                    mesh=row["mesh"],
                    n_points=0,
                    cores=int(row["cores"]),
                    total_s=float(row["total_s"]),
                    loop_s=float(row["loop_s"]),
                    s_per_frame=float(row["s_per_frame"]),
                    speedup=float(row["speedup"]),
                )
            )
        return out


_COLOURS = ["#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad", "#d35400"]


def speedup_svg(reports, schedule, width=480, height=360):
    """Measured (solid) and Amdahl (dashed) speedup curves, one pair per mesh."""
    groups = [(m, rows) for (s, m), rows in group(reports).items() if s == schedule]
    if not groups:
        raise InputError(f"no benchmark rows for schedule {schedule!r}")
    nmax = max(r.cores for _, rows in groups for r in rows)
    curves = []
    for mesh, rows in groups:
        p = fit_p([r.cores for r in rows], [r.speedup for r in rows])
        ns = np.linspace(1.0, max(nmax, 2), 64)
        curves.append((mesh, rows, p, ns, amdahl_speedup(p, ns)))
    smax = max(max(max(r.speedup for r in rows), float(a.max())) for _, rows, _, _, a in curves)
    smax = max(smax, 1.0) * 1.1
    x0, y0, x1, y1 = 50, height - 40, width - 20, 20

    def px(n, s):
        x = x0 + (n - 1.0) / max(nmax - 1.0, 1.0) * (x1 - x0)
        y = y0 - s / smax * (y0 - y1)
        return f"{x:.2f},{y:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="14" text-anchor="middle" font-size="12">speedup, {schedule} schedule</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2:.0f}" y="{height - 8}" text-anchor="middle" font-size="11">cores</text>',
    ]
    for i, (mesh, rows, p, ns, amd) in enumerate(curves):
        col = _COLOURS[i % len(_COLOURS)]
        meas = " ".join(px(r.cores, r.speedup) for r in rows)
        theo = " ".join(px(n, s) for n, s in zip(ns, amd))
        out.append(f'<polyline class="measured" data-mesh="{mesh}" points="{meas}" fill="none" stroke="{col}" stroke-width="2"/>')
        out.append(f'<polyline class="amdahl" data-mesh="{mesh}" data-p="{p:.4f}" points="{theo}" fill="none" stroke="{col}" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{x1 - 4}" y="{y1 + 14 * (i + 1)}" text-anchor="end" font-size="11" fill="{col}">{mesh} (p={p:.3f})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, reports, schedule):
    with open(path, "w") as fh:
        fh.write(speedup_svg(reports, schedule))
