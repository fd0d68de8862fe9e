"""Synthetic acquisition sessions: frame sequences, noise, and the frame-file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InputError
from ..geometry import domain_from_dict

SESSION_SCHEMA = "fastdbar/session-1"


@dataclass(frozen=True, eq=False)
class SyntheticSession:
    """Raw (pre-basis-change) voltage frames plus acquisition metadata.

    ``geometry`` is the boundary fixture dictionary the frames were simulated
    on, so a session file is self-contained.
    """

    frames: list
    L: int
    skip: int
    amplitude: float
    reference_index: int = 0
    geometry: dict | None = None
    geometry_name: str | None = None
    noise_level: float = 0.0
    rng_seed: int | None = None
    indices: list | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.frames)

    @property
    def frame_indices(self):
        return list(range(len(self.frames))) if self.indices is None else list(self.indices)

    @property
    def reference(self):
        idx = self.frame_indices
        if self.reference_index not in idx:
            raise InputError(f"reference frame {self.reference_index} is not part of the session")
        return self.frames[idx.index(self.reference_index)]

    def domain(self):
        if self.geometry is None:
            raise InputError("session carries no geometry")
        return domain_from_dict(self.geometry)


def add_noise(session, level, seed=None):
    """i.i.d. Gaussian noise with std = level x per-column RMS voltage, per frame."""
    if level < 0:
        raise InputError(f"noise level must be non-negative, got {level}")
    if level == 0:
        return replace(session, frames=[np.array(f, dtype=float) for f in session.frames], noise_level=0.0, rng_seed=seed)
    rng = np.random.default_rng(seed)
    noisy = []
    for f in session.frames:
        f = np.asarray(f, dtype=float)
        rms = np.sqrt(np.mean((f - f.mean(axis=0)) ** 2, axis=0))
        noisy.append(f + level * rms[None, :] * rng.standard_normal(f.shape))
    return replace(session, frames=noisy, noise_level=float(level), rng_seed=seed)


def pulse_series(n_frames, base, pulse=0.0, period=16.0, phase=0.0):
    """base * (1 + pulse * sin(2 pi i / period + phase)) for i = 0 .. n_frames-1."""
    i = np.arange(n_frames)
    return base * (1.0 + pulse * np.sin(2.0 * np.pi * i / period + phase))


def radial_session(geom, patterns, contrasts, rho, reference="frame", max_mode=64, geometry=None, name=None):
    """Frames for a centred inclusion whose conductivity follows ``contrasts``.

    ``reference="homogeneous"`` prepends a sigma = 1 frame used as reference;
    otherwise the first frame is the reference.
    """
    from .radial import HOMOGENEOUS, RadialPhantom, solve_radial_voltages

    cache = {}
    frames = []
    if reference == "homogeneous":
        frames.append(solve_radial_voltages(HOMOGENEOUS, geom, patterns, max_mode))
    for c in contrasts:
        key = float(c)
        if key not in cache:
            cache[key] = solve_radial_voltages(RadialPhantom(rho, key), geom, patterns, max_mode)
        frames.append(cache[key].copy())
    return SyntheticSession(
        frames=frames,
        L=patterns.L,
        skip=patterns.skip,
        amplitude=patterns.amplitude,
        reference_index=0,
        geometry=geometry,
        geometry_name=name,
    )


def mesh_session(geom, mesh, patterns, sigmas, reference_sigma=None, geometry=None, name=None):
    """Frames from FEM solves; ``sigmas`` is a sequence of per-triangle conductivity arrays."""
    from .fem import FEMSolver, MeshPhantom, fem_voltages

    cache = {}

    def solve(sig):
        key = np.asarray(sig, dtype=float).tobytes()
        if key not in cache:
            ph = MeshPhantom(mesh, sig)
            cache[key] = fem_voltages(ph, geom, patterns, solver=FEMSolver(ph))
        return cache[key].copy()

    frames = []
    if reference_sigma is not None:
        frames.append(solve(reference_sigma))
    frames.extend(solve(s) for s in sigmas)
    return SyntheticSession(
        frames=frames,
        L=patterns.L,
        skip=patterns.skip,
        amplitude=patterns.amplitude,
        reference_index=0,
        geometry=geometry,
        geometry_name=name,
    )


# --- frame file ------------------------------------------------------------

def session_to_dict(session):
    obj = {
        "schema": SESSION_SCHEMA,
        "L": int(session.L),
        "skip": int(session.skip),
        "amplitude_mA": float(session.amplitude),
        "reference_index": int(session.reference_index),
        "noise_level": float(session.noise_level),
        "rng_seed": session.rng_seed,
        "geometry_name": session.geometry_name,
        "geometry": session.geometry,
        "meta": session.meta,
        "frames": [
            {"index": int(i), "voltages": np.asarray(f, dtype=float).tolist()}
            for i, f in zip(session.frame_indices, session.frames)
        ],
    }
    return obj


def session_from_dict(obj):
    try:
        L, skip = int(obj["L"]), int(obj["skip"])
        amplitude = float(obj["amplitude_mA"])
        raw_frames = obj["frames"]
        ref = int(obj["reference_index"])
    except KeyError as exc:
        raise InputError(f"session file is missing {exc}") from exc
    N = L - skip - 1
    frames, idx = [], []
    for fr in raw_frames:
        v = np.asarray(fr["voltages"], dtype=float)
        if v.shape != (L, N):
            raise InputError(f"frame {fr.get('index')} has voltage shape {v.shape}, expected {(L, N)}")
        frames.append(v)
        idx.append(int(fr["index"]))
    if ref not in idx:
        raise InputError(f"reference_index {ref} does not name a frame in the session")
    return SyntheticSession(
        frames=frames,
        L=L,
        skip=skip,
        amplitude=amplitude,
        reference_index=ref,
        geometry=obj.get("geometry"),
        geometry_name=obj.get("geometry_name"),
        noise_level=float(obj.get("noise_level", 0.0)),
        rng_seed=obj.get("rng_seed"),
        indices=idx,
        meta=obj.get("meta") or {},
    )


def dumps_session(session):
    return json.dumps(session_to_dict(session), separators=(",", ":"), allow_nan=False)


def save_session(path, session):
    with open(path, "w") as fh:
        fh.write(dumps_session(session))
        fh.write("\n")


def load_session(path):
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("schema", SESSION_SCHEMA) != SESSION_SCHEMA:
        raise InputError(f"unsupported session schema {obj.get('schema')!r}")
    return session_from_dict(obj)


def finite_or_raise(session):
    for i, f in zip(session.frame_indices, session.frames):
        if not np.all(np.isfinite(f)):
            raise InputError(f"frame {i} contains non-finite voltages")
    if not math.isfinite(session.amplitude):
        raise InputError("amplitude must be finite")
