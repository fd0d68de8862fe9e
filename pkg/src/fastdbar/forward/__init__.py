"""Synthetic data: series solver for the disk, P1 finite elements, sessions."""

from .fem import FEMSolver, MeshPhantom, TriMesh, disk_mesh, fem_voltages, mesh_domain, region_sigma
from .radial import HOMOGENEOUS, RadialPhantom, dn_radial, solve_radial_voltages
from .session import SyntheticSession, add_noise, load_session, mesh_session, radial_session, save_session

__all__ = [
    "FEMSolver",
    "HOMOGENEOUS",
    "MeshPhantom",
    "RadialPhantom",
    "SyntheticSession",
    "TriMesh",
    "add_noise",
    "disk_mesh",
    "dn_radial",
    "fem_voltages",
    "load_session",
    "mesh_domain",
    "mesh_session",
    "radial_session",
    "region_sigma",
    "save_session",
    "solve_radial_voltages",
]
