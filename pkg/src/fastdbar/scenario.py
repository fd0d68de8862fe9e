"""Synthetic acquisition scenarios described by plain config dictionaries.

A scenario fixes the geometry, the pattern family, a phantom whose contrast
pulsates over the frames, and the measurement noise.  Example::

    {"geometry": "disk", "L": 32, "skip": 0, "frames": 360,
     "phantom": {"type": "radial", "rho": 0.4, "sigma_in": 2.0},
     "pulse": 0.05, "period": 16, "reference": "frame", "noise": 1e-3, "seed": 7}
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError
from .forward.fem import mesh_domain, region_sigma
from .forward.radial import RadialPhantom
from .forward.session import add_noise, mesh_session, pulse_series, radial_session
from .geometry import (
    DATA_DIR,
    arclength_equispaced_angles,
    circle,
    electrode_quadrature,
    equispaced_angles,
    fixture_dict,
    load_fixture,
    normalize_domain,
)
from .patterns import pattern_set

GEOMETRIES = ("disk", "chest")


@dataclass
class SimulateConfig:
    geometry: str = "disk"
    L: int = 32
    skip: int = 0
    amplitude: float = 1.0
    frames: int = 360
    phantom: dict = field(default_factory=lambda: {"type": "radial", "rho": 0.4, "sigma_in": 2.0})
    pulse: float = 0.05
    period: float = 16.0
    reference: str = "frame"
    noise: float = 0.0
    seed: int | None = None
    mesh_boundary: int = 256

    def __post_init__(self):
        if not isinstance(self.frames, (int, np.integer)) or self.frames < 1:
            raise ConfigError("frames", f"need at least one frame, got {self.frames!r}")
        if not isinstance(self.L, (int, np.integer)) or self.L < 4:
            raise ConfigError("L", f"need at least 4 electrodes, got {self.L!r}")
        if not 0 <= self.skip <= self.L - 3:
            raise ConfigError("skip", f"must lie in [0, L-3], got {self.skip}")
        if self.reference not in ("frame", "homogeneous"):
            raise ConfigError("reference", f"expected 'frame' or 'homogeneous', got {self.reference!r}")
        if not self.noise >= 0:
            raise ConfigError("noise", f"must be non-negative, got {self.noise}")
        if not self.amplitude > 0:
            raise ConfigError("amplitude", f"must be positive, got {self.amplitude}")
        if not isinstance(self.phantom, dict) or self.phantom.get("type") not in ("radial", "regions"):
            raise ConfigError("phantom.type", "expected 'radial' or 'regions'")
        if self.phantom["type"] == "radial" and self.geometry != "disk":
            raise ConfigError("phantom.type", "radial phantoms need the disk geometry")
        if abs(self.pulse) >= 1:
            raise ConfigError("pulse", f"relative pulse amplitude must be below 1, got {self.pulse}")

    @classmethod
    def from_dict(cls, obj):
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown simulation option")
        return cls(**obj)


def scenario_geometry(cfg):
    """Raw fixture dictionary and normalised domain for ``cfg.geometry``."""
    if cfg.geometry == "disk":
        raw = circle(256)
        angles = equispaced_angles(cfg.L)
    elif cfg.geometry == "chest":
        raw = load_fixture(DATA_DIR / "chest_boundary.json").boundary
        angles = arclength_equispaced_angles(normalize_domain(raw), cfg.L)
    else:
        try:
            dom = load_fixture(cfg.geometry)
        except OSError as exc:
            raise ConfigError("geometry", f"expected one of {GEOMETRIES} or a fixture path: {exc}") from exc
        raw = dom.boundary
        angles = dom.electrodes.centers if dom.electrodes is not None and dom.electrodes.L == cfg.L else arclength_equispaced_angles(dom, cfg.L)
    fix = fixture_dict(raw, angles)
    dom = normalize_domain(raw, angles)
    return fix, dom


def simulate(cfg):
    """Build the synthetic session described by ``cfg`` (a SimulateConfig or dict)."""
    if isinstance(cfg, dict):
        cfg = SimulateConfig.from_dict(cfg)
    fix, dom = scenario_geometry(cfg)
    patterns = pattern_set(cfg.L, cfg.skip, cfg.amplitude, electrode_quadrature(dom).weights)
    ph = cfg.phantom
    n = int(cfg.frames) - (1 if cfg.reference == "homogeneous" else 0)
    factor = pulse_series(max(n, 0), 1.0, cfg.pulse, cfg.period)
    if ph["type"] == "radial":
        try:
            base = RadialPhantom(float(ph["rho"]), float(ph["sigma_in"]))
        except KeyError as exc:
            raise ConfigError(f"phantom.{exc.args[0]}", "missing") from exc
        contrasts = 1.0 + (base.sigma_in - 1.0) * factor
        sess = radial_session(dom, patterns, contrasts, base.rho, reference=cfg.reference, geometry=fix, name=cfg.geometry)
    else:
        mesh = mesh_domain(dom, n_boundary=cfg.mesh_boundary, exact_circle=cfg.geometry == "disk")
        bg = float(ph.get("background", 1.0))
        regions = ph.get("regions") or []
        sigmas = []
        for f in factor:
            regs = [{**r, "sigma": bg + (float(r["sigma"]) - bg) * f} for r in regions]
            sigmas.append(region_sigma(mesh, regs, bg))
        ref = np.full(len(mesh.triangles), bg) if cfg.reference == "homogeneous" else None
        sess = mesh_session(dom, mesh, patterns, sigmas, reference_sigma=ref, geometry=fix, name=cfg.geometry)
    sess = add_noise(sess, cfg.noise, cfg.seed)
    return replace(sess, meta={"pulse": cfg.pulse, "period": cfg.period, "phantom": ph, "reference": cfg.reference})
