"""Piecewise-linear finite elements for div(sigma grad u) = 0 with electrode currents.

Current enters as uniform density on electrode arcs (zero elsewhere); the
pure-Neumann nullspace is removed with a Lagrange multiplier pinning the
nodal mean of u to zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.spatial import Delaunay, cKDTree

from ..errors import GeometryError, InputError, NumericalError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class TriMesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.nodes, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        b = np.asarray(self.boundary, dtype=np.int64)
        if t.ndim != 2 or t.shape[1] != 3 or t.min() < 0 or t.max() >= len(p):
            raise GeometryError("triangle index table is malformed")
        if np.any(_areas(p, t) <= 0.0):
            raise GeometryError("mesh has inverted or degenerate triangles")
        edges = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise GeometryError("mesh has an edge shared by more than two triangles")
        outer = {tuple(e) for e in uniq[counts == 1]}
        loop = {tuple(sorted(e)) for e in zip(b, np.roll(b, -1))}
        if outer != loop:
            raise GeometryError("boundary node list does not match the mesh's boundary edges")
        object.__setattr__(self, "nodes", p)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary", b)

    @property
    def centroids(self):
        return self.nodes[self.triangles].mean(axis=1)


@dataclass(frozen=True, eq=False)
class MeshPhantom:
    mesh: TriMesh
    sigma_per_tri: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma_per_tri, dtype=float)
        if s.shape != (len(self.mesh.triangles),):
            raise InputError("need one conductivity value per triangle")
        if not np.all(s > 0):
            raise NumericalError("conductivity must be strictly positive on every triangle")
        object.__setattr__(self, "sigma_per_tri", s)


def _areas(p, t):
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def stiffness_matrix(mesh, sigma):
    p, t = mesh.nodes, mesh.triangles
    area = _areas(p, t)
    x, y = p[t, 0], p[t, 1]
    # gradients of the barycentric basis functions
    bx = np.roll(y, -1, axis=1) - np.roll(y, -2, axis=1)
    by = np.roll(x, -2, axis=1) - np.roll(x, -1, axis=1)
    coef = sigma / (4.0 * area)
    Ke = coef[:, None, None] * (bx[:, :, None] * bx[:, None, :] + by[:, :, None] * by[:, None, :])
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = len(p)
    return sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(n, n))


def mesh_domain(dom, n_boundary=256, exact_circle=False, margin=0.6):
    """Triangulate a normalised star-shaped domain.

    Equal-arclength boundary nodes and a hexagonal lattice are triangulated in
    the unit disk, where the convex hull is exactly the boundary loop, and the
    result is mapped radially onto the domain by z = r rho(phi) exp(i phi).
    """
    P = dom.perimeter
    s = P * np.arange(n_boundary) / n_boundary + dom.arclength_at(0.0)
    theta = dom.angle_at_arclength(s)
    zb = np.exp(1j * theta)
    h = TWO_PI / n_boundary
    dy = h * np.sqrt(3.0) / 2.0
    pts = []
    for r, yv in enumerate(np.arange(-1.0, 1.0 + dy, dy)):
        xs = np.arange(-1.0 + (h / 2.0 if r % 2 else 0.0), 1.0 + h, h)
        pts.append(xs + 1j * yv)
    zi = np.concatenate(pts)
    zi = zi[np.abs(zi) < 1.0 - margin * h]
    tree = cKDTree(np.column_stack([zb.real, zb.imag]))
    dist, _ = tree.query(np.column_stack([zi.real, zi.imag]))
    zi = zi[dist > margin * h]
    z = np.concatenate([zb, zi])
    xy = np.column_stack([z.real, z.imag])
    tri = Delaunay(xy).simplices
    area = _areas(xy, tri)
    tri[area < 0] = tri[area < 0][:, [0, 2, 1]]
    tri = tri[np.abs(area) > 1e-14 * h * h]
    if not exact_circle:
        rad = np.ones(len(z))
        nz = np.abs(z) > 0
        rad[nz] = np.abs(dom.point_at(np.angle(z[nz])))
        z = np.abs(z) * rad * np.exp(1j * np.angle(z))
        z[:n_boundary] = dom.point_at(theta)
    xy = np.column_stack([z.real, z.imag])
    used = np.unique(tri)
    remap = -np.ones(len(xy), dtype=np.int64)
    remap[used] = np.arange(len(used))
    if np.any(remap[:n_boundary] < 0):
        raise GeometryError("mesh generation dropped boundary nodes")
    return TriMesh(nodes=xy[used], triangles=remap[tri], boundary=remap[np.arange(n_boundary)])


def disk_mesh(n_boundary=320):
    from ..geometry import unit_disk

    return mesh_domain(unit_disk(32, 256), n_boundary=n_boundary, exact_circle=True)


def _electrode_edges(mesh, geom, width):
    """Electrode index per boundary edge (-1 off-electrode) and edge lengths."""
    b = mesh.boundary
    a, c = mesh.nodes[b], mesh.nodes[np.roll(b, -1)]
    length = np.linalg.norm(c - a, axis=1)
    mid = 0.5 * (a + c)
    s_mid = geom.arclength_at(np.arctan2(mid[:, 1], mid[:, 0]))
    s_el = geom.arclength_at(geom.electrodes.centers)
    P = geom.perimeter
    d = np.mod(s_mid[:, None] - s_el[None, :] + 0.5 * P, P) - 0.5 * P
    inside = np.abs(d) <= 0.5 * width
    owner = np.where(inside.any(axis=1), np.argmax(inside, axis=1), -1)
    return owner, length


def electrode_loads(mesh, geom, currents, width=None):
    """Nodal load vectors for per-electrode total currents (L x N)."""
    L = geom.electrodes.L
    currents = np.asarray(currents, dtype=float)
    if currents.shape[0] != L:
        raise InputError(f"current matrix has {currents.shape[0]} rows, expected {L}")
    scale = np.max(np.abs(currents)) if currents.size else 1.0
    if np.any(np.abs(currents.sum(axis=0)) > 1e-12 * max(scale, 1.0)):
        raise InputError("current patterns must sum to zero over the electrodes")
    if width is None:
        width = geom.perimeter / L
    owner, length = _electrode_edges(mesh, geom, width)
    per_el = np.bincount(owner[owner >= 0], weights=length[owner >= 0], minlength=L)
    counts = np.bincount(owner[owner >= 0], minlength=L)
    if np.any(counts < 4):
        raise InputError("mesh must resolve every electrode arc with at least 4 boundary edges")
    b = mesh.boundary
    F = np.zeros((len(mesh.nodes), currents.shape[1]))
    on = owner >= 0
    e_idx = np.flatnonzero(on)
    dens = currents[owner[on]] / per_el[owner[on], None]
    half = 0.5 * length[on, None] * dens
    np.add.at(F, b[e_idx], half)
    np.add.at(F, np.roll(b, -1)[e_idx], half)
    return F


def _sample_boundary(mesh, u, theta):
    b = mesh.boundary
    zb = mesh.nodes[b, 0] + 1j * mesh.nodes[b, 1]
    ang = np.mod(np.angle(zb), TWO_PI)
    out = np.empty((len(theta),) + u.shape[1:])
    for q, th in enumerate(np.mod(theta, TWO_PI)):
        d = np.mod(ang - th + np.pi, TWO_PI) - np.pi
        i = int(np.argmin(np.abs(d)))
        if abs(d[i]) < 1e-12:
            out[q] = u[b[i]]
            continue
        j = (i - 1) % len(b) if d[i] > 0 else (i + 1) % len(b)
        p0, p1 = mesh.nodes[b[i]], mesh.nodes[b[j]]
        e = np.array([np.cos(th), np.sin(th)])
        r = p1 - p0
        tau = -(p0[0] * e[1] - p0[1] * e[0]) / (r[0] * e[1] - r[1] * e[0])
        out[q] = (1.0 - tau) * u[b[i]] + tau * u[b[j]]
    return out


class FEMSolver:
    """Factorised Neumann problem for one conductivity; reusable across patterns."""

    def __init__(self, phantom):
        mesh = phantom.mesh
        K = stiffness_matrix(mesh, phantom.sigma_per_tri)
        n = len(mesh.nodes)
        ones = np.ones((n, 1)) / n
        A = sp.bmat([[K, sp.csr_matrix(ones)], [sp.csr_matrix(ones.T), None]], format="csc")
        try:
            self._lu = splu(A)
        except RuntimeError as exc:
            raise NumericalError(f"singular FEM system: {exc}") from exc
        self.mesh = mesh
        self.n = n

    def solve(self, F):
        rhs = np.vstack([F, np.zeros((1, F.shape[1]))])
        u = self._lu.solve(rhs)[: self.n]
        if not np.all(np.isfinite(u)):
            raise NumericalError("FEM solution is not finite (disconnected mesh or zero conductivity?)")
        return u


def fem_voltages(phantom, geom, patterns, width=None, solver=None, sample="center"):
    """Raw L x N electrode voltages for the raw current patterns.

    ``sample="center"`` reads u at the electrode-centre boundary points.
    ``sample="average"`` uses the current-density-weighted mean of u over each
    electrode arc (the load vector of a unit current), which makes the
    synthesized ND map exactly reciprocal on any geometry.
    """
    if sample not in ("center", "average"):
        raise InputError(f"sample must be 'center' or 'average', got {sample!r}")
    solver = solver or FEMSolver(phantom)
    F = electrode_loads(phantom.mesh, geom, patterns.raw, width)
    u = solver.solve(F)
    if sample == "average":
        L = geom.electrodes.L
        E = electrode_loads(phantom.mesh, geom, np.eye(L) - 1.0 / L, width)
        # unit current on electrode l balanced over all electrodes: the offset is column-constant
        return E.T @ u
    return _sample_boundary(phantom.mesh, u, geom.electrodes.centers)


def region_sigma(mesh, regions, background=1.0):
    """Per-triangle conductivity from disks ``{"center": [x, y], "radius": r, "sigma": s}``; later regions win."""
    sig = np.full(len(mesh.triangles), float(background))
    c = mesh.centroids
    for reg in regions:
        cx, cy = reg["center"]
        rx = reg.get("radius_x", reg["radius"])
        ry = reg.get("radius_y", reg["radius"])
        inside = ((c[:, 0] - cx) / rx) ** 2 + ((c[:, 1] - cy) / ry) ** 2 < 1.0
        sig[inside] = float(reg["sigma"])
    return sig


def mesh_to_dict(mesh):
    return {
        "nodes": [[float(x), float(y)] for x, y in mesh.nodes],
        "triangles": [[int(i) for i in tri] for tri in mesh.triangles],
        "boundary": [int(i) for i in mesh.boundary],
    }


def mesh_from_dict(obj):
    try:
        return TriMesh(nodes=np.asarray(obj["nodes"], float), triangles=np.asarray(obj["triangles"]), boundary=np.asarray(obj["boundary"]))
    except KeyError as exc:
        raise InputError(f"mesh fixture is missing {exc}") from exc


def load_mesh(path):
    with open(path) as fh:
        return mesh_from_dict(json.load(fh))


def save_mesh(path, mesh):
    with open(path, "w") as fh:
        json.dump(mesh_to_dict(mesh), fh)
