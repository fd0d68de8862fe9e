"""Output formats: image CSVs, pixmap rasters, diagnostics, configs and run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import os

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, InputError

CONFIG_SCHEMA = "fastdbar/config-1"
MANIFEST_SCHEMA = "fastdbar/manifest-1"
MANIFEST_NAME = "manifest.json"


# --- images ------------------------------------------------------------------

def write_image_csv(path, zmesh, sigma):
    z = np.asarray(zmesh, dtype=complex).ravel()
    data = np.column_stack([z.real, z.imag, np.asarray(sigma, dtype=float).ravel()])
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header="z_x,z_y,sigma", comments="")


def read_image_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0] + 1j * data[:, 1], data[:, 2]


def diverging_palette(n=256):
    """Blue (low) through white to red (high), ``n`` x 3 uint8."""
    u = np.linspace(-1.0, 1.0, n)
    blue = np.array([33.0, 102.0, 172.0])
    red = np.array([178.0, 24.0, 43.0])
    white = np.array([255.0, 255.0, 255.0])
    lo = white + (blue - white) * np.clip(-u, 0, 1)[:, None]
    hi = white + (red - white) * np.clip(u, 0, 1)[:, None]
    rgb = np.where((u < 0)[:, None], lo, hi)
    return np.round(rgb).astype(np.uint8)


PALETTE = diverging_palette()


def rasterize(zmesh, sigma, domain=None, size=128, delta=0.5, background=(0, 0, 0)):
    """Nearest-mesh-point raster on [-1, 1]^2 with the fixed scale [1 - delta, 1 + delta].

    Pixels outside ``domain`` (or the unit disk when it is None) get ``background``.
    Row 0 is the top of the image (largest y).
    """
    if not delta > 0:
        raise InputError(f"colour-scale half-width must be positive, got {delta}")
    z = np.asarray(zmesh, dtype=complex).ravel()
    c = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    X, Y = np.meshgrid(c, c[::-1])
    P = X + 1j * Y
    _, nearest = cKDTree(np.column_stack([z.real, z.imag])).query(np.column_stack([X.ravel(), Y.ravel()]))
    vals = np.asarray(sigma, dtype=float)[nearest]
    level = np.clip((vals - (1.0 - delta)) / (2.0 * delta), 0.0, 1.0)
    idx = np.round(level * (len(PALETTE) - 1)).astype(int)
    rgb = PALETTE[idx].reshape(size, size, 3).copy()
    inside = domain.contains(P.ravel()) if domain is not None else np.abs(P.ravel()) <= 1.0
    rgb.reshape(-1, 3)[~inside] = background
    return rgb


def write_ppm(path, rgb):
    rgb = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise InputError(f"{path}: not a binary pixmap")
    w, h, mx = int(parts[1]), int(parts[2]), int(parts[3])
    if mx != 255:
        raise InputError(f"{path}: only 8-bit pixmaps are supported")
    return np.frombuffer(parts[4][: w * h * 3], dtype=np.uint8).reshape(h, w, 3)


DIAG_HEADER = ["frame", "sigma_min", "sigma_max", "max_iterations", "mean_iterations", "max_residual", "all_converged", "max_imag_ratio", "dn_condition"]


def write_diagnostics(path, seq):
    ratio = seq.imag_ratio
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAG_HEADER)
        for q, idx in enumerate(seq.indices):
            w.writerow([
                idx,
                repr(float(seq.sigma[q].min())),
                repr(float(seq.sigma[q].max())),
                int(seq.iterations[q].max()),
                repr(float(seq.iterations[q].mean())),
                repr(float(seq.residual[q].max())),
                int(bool(seq.converged[q].all())),
                repr(float(ratio[q])),
                repr(float(seq.condition[q])),
            ])


def read_diagnostics(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- configs and manifests ----------------------------------------------------

def load_config(path):
    """Read a JSON config; the ``schema`` field, when present, must match."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config", "top level must be a JSON object")
    schema = obj.pop("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigError("schema", f"unsupported config schema {schema!r}")
    return obj


def dump_config(obj):
    return json.dumps({"schema": CONFIG_SCHEMA, **obj}, indent=2, sort_keys=True) + "\n"


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Manifest:
    """Run record written once per output directory."""

    def __init__(self, command, config, seed=None, inputs=(), fixtures=()):
        from . import __version__

        self.data = {
            "schema": MANIFEST_SCHEMA,
            "command": command,
            "version": __version__,
            "config": config,
            "seed": seed,
            "inputs": {str(p): sha256_file(p) for p in inputs},
            "fixtures": {str(p): sha256_file(p) for p in fixtures},
            "outputs": {},
            "start": _now(),
            "end": None,
        }

    def finish(self, out_dir, outputs):
        self.data["outputs"] = {os.path.relpath(p, out_dir): sha256_file(p) for p in sorted(outputs)}
        self.data["end"] = _now()
        path = os.path.join(out_dir, MANIFEST_NAME)
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def load_manifest(path):
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("schema") != MANIFEST_SCHEMA:
        raise InputError(f"{path}: not a run manifest")
    return obj
