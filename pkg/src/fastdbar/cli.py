"""Command-line front end.

    fastdbar simulate    --config sim.json --out run/ [--seed N]
    fastdbar reconstruct run/session.json --out images/ [--schedule per-z] [--mesh coarse] [--cores 4]
    fastdbar bench       run/session.json --out bench/ --cores 1,2,4,8 [--mesh coarse]
    fastdbar report      bench/ [--out bench/]

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from . import bench as benchmod
from . import io
from .errors import ConfigError, InputError, NumericalError
from .forward.session import load_session, save_session
from .pipeline import ReconConfig, reconstruct_session
from .scenario import SimulateConfig, simulate
from .zmesh import MESH_SIZES, get_zmesh

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
SECTIONS = ("simulate", "reconstruct", "render", "bench")
THROUGHPUT_TARGET = 1.0 / 16.0

log = logging.getLogger("fastdbar")


def _parse_cores(text):
    try:
        cores = [int(c) for c in str(text).split(",") if c.strip()]
    except ValueError as exc:
        raise ConfigError("--cores", f"expected a comma-separated list of integers, got {text!r}") from exc
    if not cores or min(cores) < 1:
        raise ConfigError("--cores", f"core counts must be positive integers, got {text!r}")
    return cores


def _sections(path):
    if path is None:
        return {}
    cfg = io.load_config(path)
    extra = set(cfg) - set(SECTIONS)
    if extra:
        raise ConfigError(sorted(extra)[0], f"unknown config section (expected {', '.join(SECTIONS)})")
    for k, v in cfg.items():
        if not isinstance(v, dict):
            raise ConfigError(k, "section must be a JSON object")
    return cfg


def _recon_config(sections, args):
    obj = dict(sections.get("reconstruct", {}))
    if getattr(args, "schedule", None):
        obj["schedule"] = args.schedule
    if getattr(args, "mesh", None):
        obj["zmesh"] = args.mesh
    cores = getattr(args, "cores", None)
    if cores and args.command == "reconstruct":
        obj["workers"] = benchmod.clamp_cores(_parse_cores(cores))[-1]
    return ReconConfig.from_dict(obj)


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _load_session(path):
    try:
        return load_session(path)
    except FileNotFoundError as exc:
        raise InputError(f"session file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc.msg}") from exc


def _seed(args, sess):
    return args.seed if getattr(args, "seed", None) is not None else sess.rng_seed


def cmd_simulate(args):
    sections = _sections(args.config)
    obj = dict(sections.get("simulate", {}))
    if args.seed is not None:
        obj["seed"] = args.seed
    cfg = SimulateConfig.from_dict(obj)
    out = _ensure_out(args.out)
    man = io.Manifest("simulate", {"simulate": asdict(cfg)}, seed=cfg.seed, inputs=[args.config] if args.config else [])
    sess = simulate(cfg)
    path = os.path.join(out, "session.json")
    save_session(path, sess)
    man.finish(out, [path])
    log.info("wrote %d frames to %s", len(sess), path)
    return EXIT_OK


def cmd_reconstruct(args):
    sections = _sections(args.config)
    cfg = _recon_config(sections, args)
    render = {"delta": 0.5, "size": 128, **sections.get("render", {})}
    sess = _load_session(args.session)
    geom = sess.domain()
    out = _ensure_out(args.out)
    man = io.Manifest("reconstruct", {"reconstruct": cfg.to_dict(), "render": render}, seed=_seed(args, sess), inputs=[args.session] + ([args.config] if args.config else []))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        seq = reconstruct_session(sess, cfg, geom=geom)
    outputs = []
    for q, idx in enumerate(seq.indices):
        stem = os.path.join(out, f"frame_{idx:04d}")
        io.write_image_csv(stem + ".csv", seq.zmesh, seq.sigma[q])
        io.write_ppm(stem + ".ppm", io.rasterize(seq.zmesh, seq.sigma[q], geom, int(render["size"]), float(render["delta"])))
        outputs += [stem + ".csv", stem + ".ppm"]
    diag = os.path.join(out, "diagnostics.csv")
    io.write_diagnostics(diag, seq)
    outputs.append(diag)
    man.data["timings"] = seq.timings
    man.finish(out, outputs)
    bad = int(np.sum(~seq.converged.all(axis=1)))
    if bad:
        log.warning("%d frames had z-points above the GMRES tolerance", bad)
    log.info("reconstructed %d frames in %.2f s (%.4f s/frame)", len(seq), seq.timings["total_s"], seq.s_per_frame)
    return EXIT_OK


def cmd_bench(args):
    sections = _sections(args.config)
    opts = {"cores": [1, 2, 4, 8], "repeats": 3, "meshes": list(MESH_SIZES), "frames": None, **sections.get("bench", {})}
    cfg = _recon_config(sections, args)
    cores = benchmod.clamp_cores(_parse_cores(args.cores) if args.cores else opts["cores"])
    meshes = [args.mesh] if args.mesh else list(opts["meshes"])
    schedules = [cfg.schedule] if args.schedule else list(benchmod.SCHEDULES)
    sess = _load_session(args.session)
    if opts["frames"]:
        keep = int(opts["frames"])
        frames = sess.frames[: keep + 1]
        sess = replace(sess, frames=frames, indices=sess.frame_indices[: keep + 1])
        sess.reference  # raises if the reference was cut off
    geom = sess.domain()
    for m in meshes:
        get_zmesh(geom, m)
    out = _ensure_out(args.out)
    man = io.Manifest(
        "bench",
        {"reconstruct": cfg.to_dict(), "bench": {**opts, "cores": cores, "meshes": meshes, "schedules": schedules}},
        seed=_seed(args, sess),
        inputs=[args.session] + ([args.config] if args.config else []),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        reports = benchmod.benchmark(sess, cfg, cores, int(opts["repeats"]), meshes, schedules, geom=geom)
    csv_path = os.path.join(out, "bench.csv")
    benchmod.write_csv(csv_path, reports)
    outputs = [csv_path]
    for s in schedules:
        p = os.path.join(out, f"speedup_{s}.svg")
        benchmod.write_svg(p, reports, s)
        outputs.append(p)
    man.data["cpu_count"] = os.cpu_count()
    man.data["loop_fraction"] = {f"{s}/{m}": benchmod.loop_fraction_p(rows) for (s, m), rows in benchmod.group(reports).items()}
    man.finish(out, outputs)
    for r in reports:
        log.info("%-9s %-7s cores=%d total=%.3fs loop=%.3fs s/frame=%.4f speedup=%.2f", r.schedule, r.mesh, r.cores, r.total_s, r.loop_s, r.s_per_frame, r.speedup)
    return EXIT_OK


def render_report(reports, cpu_count=None, loop_fraction=None):
    """Markdown summary of a benchmark CSV with the scaling and throughput annotations."""
    cpu_count = cpu_count or os.cpu_count() or 1
    lines = ["# Benchmark report", "", f"Timing: {benchmod.TIMING_NOTE}.", f"Hardware threads: {cpu_count}.", ""]
    for (s, m), rows in benchmod.group(reports).items():
        p_fit = benchmod.fit_p([r.cores for r in rows], [r.speedup for r in rows])
        p_loop = (loop_fraction or {}).get(f"{s}/{m}")
        if p_loop is None:
            p_loop = benchmod.loop_fraction_p(rows)
        lines += [f"## {s} schedule, {m} mesh", "", "| Cores | Total runtime (s) | Loop runtime (s) | s/frame | speedup | Amdahl (loop p) |", "|---|---|---|---|---|---|"]
        for r in rows:
            amd = benchmod.amdahl_speedup(p_loop, r.cores) if np.isfinite(p_loop) else float("nan")
            lines.append(f"| {r.cores} | {r.total_s:.4f} | {r.loop_s:.4f} | {r.s_per_frame:.4f} | {r.speedup:.3f} | {amd:.3f} |")
        ok = all(r.speedup <= 1.1 * benchmod.amdahl_speedup(p_loop, r.cores) for r in rows) if np.isfinite(p_loop) else False
        lines += ["", f"Fitted parallel fraction p = {p_fit:.4f}; loop/total fraction p = {p_loop:.4f}; Amdahl dominance (10% slack): {'PASS' if ok else 'FAIL'}."]
        if s == "per_frame" and m == "coarse":
            best = min(r.s_per_frame for r in rows)
            verdict = "PASS" if best <= THROUGHPUT_TARGET else "FAIL"
            note = "" if cpu_count >= 8 else " (report only: fewer than 8 hardware threads)"
            lines.append(f"Throughput: best {best:.4f} s/frame against the 16 frames/s target ({THROUGHPUT_TARGET:.4f} s/frame): {verdict}{note}.")
        if s == "per_frame" and m == "medium":
            four = [r for r in rows if r.cores == 4]
            if four and cpu_count >= 8:
                lines.append(f"Scaling at 4 cores: {four[0].speedup:.2f}x ({'PASS' if four[0].speedup >= 2.5 else 'FAIL'} against 2.5x).")
            else:
                lines.append("Scaling at 4 cores: report only (fewer than 8 hardware threads or no 4-core row).")
        if s == "per_z":
            lines.append(f"Peak-efficiency worker count: {benchmod.peak_workers(rows)}.")
        lines.append("")
    return "\n".join(lines)


def cmd_report(args):
    src = args.input
    csv_path = os.path.join(src, "bench.csv") if os.path.isdir(src) else src
    if not os.path.exists(csv_path):
        raise InputError(f"no benchmark CSV at {csv_path}")
    reports = benchmod.read_csv(csv_path)
    man_path = os.path.join(os.path.dirname(csv_path), io.MANIFEST_NAME)
    cpu, frac = None, None
    if os.path.exists(man_path):
        m = io.load_manifest(man_path)
        cpu, frac = m.get("cpu_count"), m.get("loop_fraction")
    text = render_report(reports, cpu, frac)
    out = _ensure_out(args.out) if args.out else os.path.dirname(csv_path) or "."
    path = os.path.join(out, "report.md")
    with open(path, "w") as fh:
        fh.write(text)
    print(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="fastdbar", description="Fast parallel D-bar EIT difference imaging.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, session=True):
        if session:
            sp.add_argument("session", help="session JSON written by 'simulate'")
        sp.add_argument("--config", help="JSON config with simulate/reconstruct/render/bench sections")
        sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("simulate", help="write a synthetic session")
    common(sp, session=False)
    sp.add_argument("--seed", type=int, help="noise seed (overrides the config)")
    sp.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("reconstruct", cmd_reconstruct, "reconstruct every frame of a session"), ("bench", cmd_bench, "time both schedules over worker counts")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--schedule", choices=["per-z", "per-frame"])
        sp.add_argument("--mesh", help="coarse, medium, fine or a JSON file of [x, y] points")
        sp.add_argument("--cores", help="comma-separated worker counts (reconstruct uses the largest)")
        sp.add_argument("--seed", type=int, help="recorded in the manifest only")
        sp.set_defaults(func=func)

    sp = sub.add_parser("report", help="summarise a benchmark directory")
    sp.add_argument("input", help="benchmark directory or bench.csv")
    sp.add_argument("--out", help="directory for report.md (defaults to the input directory)")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        where = f" (frame {exc.frame_index})" if exc.frame_index is not None else ""
        print(f"numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
