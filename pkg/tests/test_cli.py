import json
import os
import re
import subprocess
import sys

import numpy as np
import pytest

from fastdbar.cli import main
from fastdbar.forward.session import load_session
from fastdbar.io import dump_config, load_manifest, read_diagnostics, read_image_csv, read_ppm, sha256_file


def _config(tmp_path, name="c.json", **sections):
    p = tmp_path / name
    p.write_text(dump_config(sections))
    return str(p)


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    """A small simulated inclusion session written through the CLI."""
    d = tmp_path_factory.mktemp("run")
    cfg = d / "sim.json"
    cfg.write_text(dump_config({"simulate": {"frames": 4, "reference": "homogeneous", "noise": 1e-3}}))
    assert main(["simulate", "--config", str(cfg), "--out", str(d / "sim"), "--seed", "3"]) == 0
    return d


def test_simulate_360_frames_reproducible(tmp_path):
    cfg = _config(tmp_path, simulate={"frames": 360, "noise": 1e-3})
    hashes = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["simulate", "--config", cfg, "--out", str(out), "--seed", "7"]) == 0
        hashes.append(sha256_file(out / "session.json"))
        man = load_manifest(out / "manifest.json")
        assert man["seed"] == 7 and man["outputs"] == {"session.json": hashes[-1]}
    assert hashes[0] == hashes[1]
    sess = load_session(tmp_path / "o0" / "session.json")
    assert len(sess) == 360 and sess.rng_seed == 7


def test_simulate_zero_frames(tmp_path, capsys):
    cfg = _config(tmp_path, simulate={"frames": 0})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "frames" in capsys.readouterr().err


def test_bad_field_named(tmp_path, capsys):
    cfg = _config(tmp_path, reconstruct={"tolerance": 1e-3})
    assert main(["simulate", "--config", _config(tmp_path, "s.json", simulate={"frames": 2}), "--out", str(tmp_path / "s")]) == 0
    assert main(["reconstruct", str(tmp_path / "s" / "session.json"), "--config", cfg, "--out", str(tmp_path / "r")]) == 2
    assert "tolerance" in capsys.readouterr().err
    assert main(["simulate", "--config", _config(tmp_path, "x.json", plot={}), "--out", str(tmp_path / "x")]) == 2


def test_simulate_chest(tmp_path):
    cfg = _config(tmp_path, simulate={
        "geometry": "chest", "frames": 2, "mesh_boundary": 192,
        "phantom": {"type": "regions", "regions": [{"center": [-0.15, 0.05], "radius": 0.2, "sigma": 2.0}]},
    })
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    obj = json.loads((tmp_path / "o" / "session.json").read_text())
    assert obj["geometry_name"] == "chest" and len(obj["geometry"]["points"]) > 3


def test_reconstruct_outputs_and_rerun(run, tmp_path):
    sess = str(run / "sim" / "session.json")
    cfg = _config(tmp_path, reconstruct={"zmesh": "coarse"}, render={"size": 64})
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert main(["reconstruct", sess, "--config", cfg, "--out", str(out), "--schedule", "per-frame"]) == 0
        outs.append(out)
    names = sorted(os.listdir(outs[0]))
    assert names == ["diagnostics.csv"] + [f"frame_{i:04d}.{e}" for i in range(1, 4) for e in ("csv", "ppm")] + ["manifest.json"]
    for n in names:
        if n.endswith(".csv") and n.startswith("frame"):
            assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
    z, s = read_image_csv(outs[0] / "frame_0001.csv")
    assert len(z) == 562
    i = np.argmax(np.abs(s - 1.0))
    assert s[i] > 1.0 and abs(z[i]) < 0.6
    img = read_ppm(outs[0] / "frame_0001.ppm")
    assert img.shape == (64, 64, 3)
    diag = read_diagnostics(outs[0] / "diagnostics.csv")
    assert [int(r["frame"]) for r in diag] == [1, 2, 3]
    man = load_manifest(outs[0] / "manifest.json")
    assert man["config"]["reconstruct"]["schedule"] == "per_frame"
    assert man["inputs"][sess] == sha256_file(sess)


def test_reconstruct_missing_reference(run, tmp_path, capsys):
    obj = json.loads((run / "sim" / "session.json").read_text())
    obj["frames"] = obj["frames"][1:]
    p = tmp_path / "s.json"
    p.write_text(json.dumps(obj))
    assert main(["reconstruct", str(p), "--out", str(tmp_path / "r")]) == 2
    assert "reference" in capsys.readouterr().err


def test_reconstruct_nan_frame(run, tmp_path, capsys):
    obj = json.loads((run / "sim" / "session.json").read_text())
    obj["frames"][2]["voltages"][0][0] = float("nan")
    p = tmp_path / "s.json"
    p.write_text(json.dumps(obj))
    cfg = _config(tmp_path, reconstruct={"zmesh": 30})
    assert main(["reconstruct", str(p), "--config", cfg, "--out", str(tmp_path / "r")]) == 3
    assert "frame 2" in capsys.readouterr().err


def test_reconstruct_reference_is_flat(run, tmp_path):
    cfg = _config(tmp_path, reconstruct={"zmesh": 40, "include_reference": True})
    assert main(["reconstruct", str(run / "sim" / "session.json"), "--config", cfg, "--out", str(tmp_path / "r")]) == 0
    _, s = read_image_csv(tmp_path / "r" / "frame_0000.csv")
    assert np.max(np.abs(s - 1.0)) <= 1e-6


def test_missing_session(tmp_path):
    assert main(["reconstruct", str(tmp_path / "nope.json"), "--out", str(tmp_path / "r")]) == 2


def test_bench_and_report(run, tmp_path, capsys):
    cfg = _config(tmp_path, bench={"repeats": 1, "frames": 2})
    out = tmp_path / "b"
    assert main(["bench", str(run / "sim" / "session.json"), "--config", cfg, "--out", str(out), "--cores", "1", "--mesh", "coarse"]) == 0
    lines = (out / "bench.csv").read_text().splitlines()
    assert lines[0] == "schedule,mesh,cores,total_s,loop_s,s_per_frame,speedup"
    assert len(lines) == 3 and all(l.endswith(",1.0000") for l in lines[1:])
    for sched in ("per_z", "per_frame"):
        svg = (out / f"speedup_{sched}.svg").read_text()
        assert len(re.findall(r"<polyline", svg)) == 2 and svg.count("stroke-dasharray") == 1
    man = load_manifest(out / "manifest.json")
    assert man["cpu_count"] == os.cpu_count() and set(man["outputs"]) == {"bench.csv", "speedup_per_z.svg", "speedup_per_frame.svg"}
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "per_frame schedule, coarse mesh" in text and "Amdahl dominance" in text and "Throughput" in text
    assert (out / "report.md").exists()


def test_bench_clamps_cores(run, tmp_path):
    cfg = _config(tmp_path, bench={"repeats": 1, "frames": 1})
    n = (os.cpu_count() or 1) + 1
    with pytest.warns(RuntimeWarning, match="clamped"):
        rc = main(["bench", str(run / "sim" / "session.json"), "--config", cfg, "--out", str(tmp_path / "b"), "--cores", f"1,{n}", "--mesh", "coarse", "--schedule", "per-frame"])
    assert rc == 0
    cores = [int(l.split(",")[2]) for l in (tmp_path / "b" / "bench.csv").read_text().splitlines()[1:]]
    assert max(cores) <= (os.cpu_count() or 1)


def test_report_missing(tmp_path):
    assert main(["report", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "fastdbar", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
    r = subprocess.run([sys.executable, "-m", "fastdbar", "simulate", "--out", str(tmp_path), "--config", str(tmp_path / "none.json")], capture_output=True, text=True)
    assert r.returncode == 2
