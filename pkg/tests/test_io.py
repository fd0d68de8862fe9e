import json

import numpy as np
import pytest

from fastdbar.errors import ConfigError, InputError
from fastdbar.io import (
    PALETTE,
    Manifest,
    dump_config,
    load_config,
    load_manifest,
    rasterize,
    read_image_csv,
    read_ppm,
    sha256_file,
    write_image_csv,
    write_ppm,
)
from fastdbar.zmesh import get_zmesh


def test_palette_endpoints():
    assert PALETTE.shape == (256, 3) and PALETTE.dtype == np.uint8
    lo, hi = PALETTE[0], PALETTE[-1]
    assert lo[2] > lo[0] and hi[0] > hi[2]
    mid = PALETTE[127:129].astype(int)
    assert np.all(mid >= 250)


def test_image_csv_roundtrip(tmp_path, rng):
    z = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    s = rng.standard_normal(50)
    p = tmp_path / "f.csv"
    write_image_csv(p, z, s)
    first = p.read_bytes()
    z2, s2 = read_image_csv(p)
    assert np.array_equal(z, z2) and np.array_equal(s, s2)
    write_image_csv(p, z2, s2)
    assert p.read_bytes() == first
    assert first.decode().splitlines()[0] == "z_x,z_y,sigma"


def test_ppm_roundtrip(tmp_path, rng):
    img = rng.integers(0, 256, size=(17, 23, 3), dtype=np.uint8)
    p = tmp_path / "a.ppm"
    write_ppm(p, img)
    first = p.read_bytes()
    assert first.startswith(b"P6\n23 17\n255\n")
    assert np.array_equal(read_ppm(p), img)
    write_ppm(p, read_ppm(p))
    assert p.read_bytes() == first


def test_ppm_rejects_other_formats(tmp_path):
    p = tmp_path / "a.ppm"
    p.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(InputError):
        read_ppm(p)


def test_raster_fixed_scale(disk):
    z = get_zmesh(disk, "coarse")
    flat = rasterize(z, np.ones(len(z)), disk, size=32)
    inside = disk.contains(((np.arange(32) + 0.5) / 16 - 1)[None, :] + 1j * ((np.arange(32) + 0.5) / 16 - 1)[::-1, None])
    assert np.all(flat[inside] >= 250)
    assert np.all(flat[~inside] == 0)
    hot = rasterize(z, np.full(len(z), 1.5), disk, size=32)
    assert np.all(hot[inside] == PALETTE[-1])
    with pytest.raises(InputError):
        rasterize(z, np.ones(len(z)), delta=0)


def test_raster_orientation(disk):
    z = np.array([0.5j, -0.5j])
    img = rasterize(z, np.array([1.5, 0.5]), disk, size=8)
    assert np.array_equal(img[1, 4], PALETTE[-1]) and np.array_equal(img[6, 4], PALETTE[0])


def test_config_roundtrip(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(dump_config({"simulate": {"frames": 3}}))
    assert load_config(p) == {"simulate": {"frames": 3}}
    p.write_text(json.dumps({"schema": "other/9"}))
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert info.value.field == "schema"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(InputError):
        load_config(tmp_path / "absent.json")


def test_manifest_hashes(tmp_path):
    inp = tmp_path / "in.txt"
    inp.write_text("abc")
    out = tmp_path / "out"
    out.mkdir()
    f = out / "o.txt"
    f.write_text("xyz")
    m = Manifest("simulate", {"frames": 1}, seed=3, inputs=[inp])
    path = m.finish(str(out), [str(f)])
    data = load_manifest(path)
    assert data["inputs"][str(inp)] == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert data["outputs"] == {"o.txt": sha256_file(f)}
    assert data["seed"] == 3 and data["command"] == "simulate" and data["end"] is not None
