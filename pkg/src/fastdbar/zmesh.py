"""Reconstruction point sets (z-meshes) inside a normalised domain.

The bundled sizes match the coarse / medium / fine meshes used for timing:
562, 1931 and 5916 points.  Points follow a sunflower (Vogel) spiral on the
unit disk, mapped radially onto the domain, so the count is exact for any
star-shaped boundary.
"""

import json

import numpy as np

from .errors import InputError

MESH_SIZES = {"coarse": 562, "medium": 1931, "fine": 5916}
GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def sunflower(n, fill=0.95):
    i = np.arange(n)
    r = fill * np.sqrt((i + 0.5) / n)
    return r * np.exp(1j * GOLDEN_ANGLE * i)


def domain_zmesh(dom, n, fill=0.95):
    w = sunflower(n, fill)
    return np.abs(w) * dom.point_at(np.angle(w))


def get_zmesh(dom, spec="coarse", fill=0.95):
    """Named fixture, explicit point count, or path to a JSON list of [x, y] pairs."""
    if isinstance(spec, (int, np.integer)):
        return domain_zmesh(dom, int(spec), fill)
    if spec in MESH_SIZES:
        return domain_zmesh(dom, MESH_SIZES[spec], fill)
    try:
        with open(spec) as fh:
            pts = np.asarray(json.load(fh), dtype=float)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read z-mesh {spec!r}: {exc}") from exc
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InputError("z-mesh file must hold a list of [x, y] pairs")
    return pts[:, 0] + 1j * pts[:, 1]
