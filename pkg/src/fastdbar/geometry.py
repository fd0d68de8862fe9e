"""Imaging-domain boundary, electrode layout and arclength quadrature.

The boundary is a closed, counterclockwise polyline.  After normalisation the
vertex centroid sits at the origin and the farthest vertex is at radius one,
so the spectral truncation radius becomes a dimensionless choice.  All angular
quantities are measured about that origin; the domain therefore has to be
star-shaped with respect to its vertex centroid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GeometryError, InputError

TWO_PI = 2.0 * np.pi


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _segments_intersect(points):
    """True if any two non-adjacent edges of the closed polyline intersect."""
    a = points
    b = np.roll(points, -1, axis=0)
    n = len(points)
    i, j = np.triu_indices(n, k=2)
    # edge 0 and edge n-1 share a vertex
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    p, r = a[i], b[i] - a[i]
    q, s = a[j], b[j] - a[j]
    d1 = _cross(r, q - p)
    d2 = _cross(r, q + s - p)
    d3 = _cross(s, p - q)
    d4 = _cross(s, p + r - q)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    return bool(np.any(proper))


def signed_area(points):
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Closed simple polyline traced counterclockwise.

    ``points`` holds ``(n, 2)`` coordinates without repeating the first point.
    """

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError(f"boundary points must have shape (n, 2), got {pts.shape}")
        if len(pts) < 8:
            raise InputError(f"boundary needs at least 8 points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise InputError("boundary points must be finite")
        edges = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        if np.any(edges <= 0.0):
            raise GeometryError("consecutive boundary points coincide")
        if _segments_intersect(pts):
            raise GeometryError("boundary curve is self-intersecting")
        if signed_area(pts) <= 0.0:
            raise GeometryError("boundary curve must be counterclockwise (positive signed area)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "closed", True)

    @property
    def complex(self):
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def perimeter(self):
        return float(np.sum(np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)))


@dataclass(frozen=True, eq=False)
class ElectrodeLayout:
    """Electrode centres on the normalised boundary.

    Attributes
    ----------
    L : int
        Number of electrodes.
    centers : ndarray
        Boundary angles of the electrode centres, strictly increasing.
    area : float
        Effective electrode area in normalised length units.
    positions : ndarray
        Complex coordinates of the electrode centres.
    """

    L: int
    centers: np.ndarray
    area: float
    positions: np.ndarray


@dataclass(frozen=True, eq=False)
class NormalizedDomain:
    """Boundary in normalised coordinates plus the electrode layout.

    ``arclength`` is the cumulative chord-length table along the knots in
    ``knot_angles``; it starts at the point where the ray of angle zero meets
    the boundary and ends at the total perimeter.
    """

    boundary: BoundaryCurve
    center: np.ndarray
    scale: float
    arclength: np.ndarray
    knot_angles: np.ndarray
    knots: np.ndarray
    electrodes: ElectrodeLayout | None = field(default=None)

    @property
    def perimeter(self):
        return float(self.arclength[-1])

    def _segment(self, theta):
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        k = np.searchsorted(self.knot_angles, theta, side="right") - 1
        k = np.clip(k, 0, len(self.knots) - 2)
        return theta, k

    def _ray_param(self, theta, k):
        a = self.knots[k]
        b = self.knots[k + 1]
        d = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        denom = _cross(b - a, d)
        tau = -_cross(a, d) / denom
        return np.clip(tau, 0.0, 1.0), a, b

    def point_at(self, theta):
        """Complex boundary point hit by the ray from the origin at ``theta``."""
        theta, k = self._segment(theta)
        tau, a, b = self._ray_param(theta, k)
        p = a + tau[..., None] * (b - a)
        return p[..., 0] + 1j * p[..., 1]

    def arclength_at(self, theta):
        """Arclength s(theta) measured counterclockwise from angle zero."""
        theta, k = self._segment(theta)
        tau, a, b = self._ray_param(theta, k)
        seg = np.linalg.norm(b - a, axis=-1)
        return self.arclength[k] + tau * seg

    def angle_at_arclength(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.perimeter)
        k = np.searchsorted(self.arclength, s, side="right") - 1
        k = np.clip(k, 0, len(self.knots) - 2)
        seg = self.arclength[k + 1] - self.arclength[k]
        tau = (s - self.arclength[k]) / seg
        p = self.knots[k] + tau[..., None] * (self.knots[k + 1] - self.knots[k])
        return np.mod(np.arctan2(p[..., 1], p[..., 0]), TWO_PI)

    def radius_at(self, theta):
        return np.abs(self.point_at(theta))

    def contains(self, z):
        """Even-odd point-in-polygon test for complex points."""
        z = np.asarray(z)
        x, y = z.real.ravel(), z.imag.ravel()
        px, py = self.boundary.points[:, 0], self.boundary.points[:, 1]
        qx, qy = np.roll(px, -1), np.roll(py, -1)
        inside = np.zeros(x.shape, dtype=bool)
        for x0, y0, x1, y1 in zip(px, py, qx, qy):
            crosses = (y0 > y) != (y1 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            inside ^= crosses & (x < xint)
        return inside.reshape(z.shape)

    def to_physical(self, z):
        return np.asarray(z) * self.scale + (self.center[0] + 1j * self.center[1])

    def with_electrodes(self, angles, area=None):
        return _attach_electrodes(self, angles, area)


def _parametrize(points):
    """Knot table for the star-shaped polyline, starting at angle zero."""
    ang = np.mod(np.arctan2(points[:, 1], points[:, 0]), TWO_PI)
    start = int(np.argmin(ang))
    pts = np.roll(points, -start, axis=0)
    ang = np.roll(ang, -start)
    if np.any(np.diff(ang) <= 0.0):
        raise GeometryError("boundary is not star-shaped with respect to its vertex centroid")
    # point on the closing edge (last -> first) hit by the ray at angle zero
    a, b = pts[-1], pts[0]
    if ang[0] == 0.0:
        p0 = b
        knots = np.vstack([pts, pts[:1]])
        kang = np.concatenate([ang, [TWO_PI]])
    else:
        d = np.array([1.0, 0.0])
        tau = -_cross(a, d) / _cross(b - a, d)
        p0 = a + tau * (b - a)
        knots = np.vstack([p0, pts, p0])
        kang = np.concatenate([[0.0], ang, [TWO_PI]])
    seg = np.linalg.norm(np.diff(knots, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 0.0])
    knots, kang = knots[keep], kang[keep]
    seg = np.linalg.norm(np.diff(knots, axis=0), axis=1)
    table = np.concatenate([[0.0], np.cumsum(seg)])
    return knots, kang, table


def _attach_electrodes(dom, angles, area):
    angles = np.asarray(angles, dtype=float).ravel()
    L = len(angles)
    if L < 4:
        raise InputError(f"need at least 4 electrodes, got {L}")
    if not (0.0 <= angles[0] < TWO_PI):
        raise InputError("first electrode angle must lie in [0, 2*pi)")
    if np.any(np.diff(angles) <= 0.0) or angles[-1] - angles[0] >= TWO_PI:
        raise InputError("electrode angles must be distinct and strictly increasing modulo 2*pi")
    if area is None:
        area = dom.perimeter / L
    area = float(area)
    if not area > 0.0:
        raise InputError(f"electrode area must be positive, got {area}")
    angles.setflags(write=False)
    pos = dom.point_at(angles)
    pos.setflags(write=False)
    layout = ElectrodeLayout(L=L, centers=angles, area=area, positions=pos)
    return NormalizedDomain(
        boundary=dom.boundary,
        center=dom.center,
        scale=dom.scale,
        arclength=dom.arclength,
        knot_angles=dom.knot_angles,
        knots=dom.knots,
        electrodes=layout,
    )


def normalize_domain(raw, electrode_angles=None, area=None):
    """Centre the boundary on its vertex centroid and scale it to max radius one.

    Parameters
    ----------
    raw : BoundaryCurve or array_like
        Boundary in physical units.
    electrode_angles : array_like, optional
        Electrode-centre angles (radians) about the normalised origin.
    area : float, optional
        Electrode area in normalised units.  Defaults to perimeter / L, the arc
        length of one gap-free electrode.

    Returns
    -------
    NormalizedDomain
    """
    if not isinstance(raw, BoundaryCurve):
        raw = BoundaryCurve(np.asarray(raw, dtype=float))
    center = raw.points.mean(axis=0)
    shifted = raw.points - center
    scale = float(np.max(np.hypot(shifted[:, 0], shifted[:, 1])))
    normalized = BoundaryCurve(shifted / scale)
    knots, kang, table = _parametrize(normalized.points)
    for arr in (center, knots, kang, table):
        arr.setflags(write=False)
    dom = NormalizedDomain(
        boundary=normalized,
        center=center,
        scale=scale,
        arclength=table,
        knot_angles=kang,
        knots=knots,
    )
    if electrode_angles is not None:
        dom = _attach_electrodes(dom, electrode_angles, area)
    return dom


@dataclass(frozen=True, eq=False)
class ElectrodeQuadrature:
    """Per-electrode quadrature data.

    ``arclength`` is s(theta_l); ``dtheta`` the backward angular gap with the
    wraparound at the first electrode; ``darc`` the boundary arclength over the
    same gap, i.e. the mean ds/dtheta times ``dtheta``.  ``weights`` are the
    inner-product weights darc / A used by the pattern basis and ND matrix.
    """

    arclength: np.ndarray
    dtheta: np.ndarray
    darc: np.ndarray
    area: float

    @property
    def speed(self):
        return self.darc / self.dtheta

    @property
    def weights(self):
        return self.darc / self.area


def electrode_quadrature(dom):
    if dom.electrodes is None:
        raise InputError("domain has no electrode layout")
    theta = dom.electrodes.centers
    s = dom.arclength_at(theta)
    dtheta = np.diff(theta, prepend=theta[-1] - TWO_PI)
    darc = np.diff(s, prepend=s[-1] - dom.perimeter)
    return ElectrodeQuadrature(arclength=s, dtheta=dtheta, darc=darc, area=dom.electrodes.area)


def equispaced_angles(L, offset=0.0):
    return offset + TWO_PI * np.arange(L) / L


def circle(n=256, radius=1.0, center=(0.0, 0.0)):
    t = TWO_PI * np.arange(n) / n
    return BoundaryCurve(np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)]))


def unit_disk(L=32, n=256, area=None):
    """Unit disk with L equispaced electrodes; use n a multiple of L so centres are vertices."""
    return normalize_domain(circle(n), equispaced_angles(L), area)


def chest_curve(n=128, half_width=0.15):
    """Chest-like cross-section: a flattened ellipse with a posterior spine notch."""
    t = TWO_PI * np.arange(n) / n
    a, b = 1.0, 0.68
    r = a * b / np.sqrt((b * np.cos(t)) ** 2 + (a * np.sin(t)) ** 2)
    r = r * (1.0 + 0.06 * np.cos(2 * t) ** 2)
    r = r * (1.0 - 0.10 * np.exp(-(((t - 1.5 * np.pi) / 0.28) ** 2)))
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    return BoundaryCurve(half_width * pts / np.max(np.abs(pts[:, 0])))


def arclength_equispaced_angles(dom, L, start_angle=0.0):
    s0 = dom.arclength_at(start_angle)
    s = s0 + dom.perimeter * np.arange(L) / L
    ang = dom.angle_at_arclength(s)
    return np.sort(ang)


# --- fixture files -------------------------------------------------------

DATA_DIR = Path(__file__).with_name("data")


def load_fixture(path):
    """Read ``{"points": [[x, y], ...], "electrode_angles": [...], "area": a}``."""
    with open(path) as fh:
        obj = json.load(fh)
    return domain_from_dict(obj)


def domain_from_dict(obj):
    try:
        points = np.asarray(obj["points"], dtype=float)
    except KeyError as exc:
        raise InputError("fixture is missing 'points'") from exc
    return normalize_domain(BoundaryCurve(points), obj.get("electrode_angles"), obj.get("area"))


def fixture_dict(raw, electrode_angles, area=None):
    pts = raw.points if isinstance(raw, BoundaryCurve) else np.asarray(raw)
    return {
        "points": [[float(x), float(y)] for x, y in pts],
        "electrode_angles": [float(a) for a in electrode_angles],
        "area": None if area is None else float(area),
    }


def save_fixture(path, raw, electrode_angles, area=None):
    with open(path, "w") as fh:
        json.dump(fixture_dict(raw, electrode_angles, area), fh, indent=1)
        fh.write("\n")


def chest_domain(L=32):
    """Bundled chest fixture (128 points); electrodes equispaced in arclength."""
    dom = load_fixture(DATA_DIR / "chest_boundary.json")
    if dom.electrodes is not None and dom.electrodes.L == L:
        return dom
    return dom.with_electrodes(arclength_equispaced_angles(dom, L))
