"""Fast parallel D-bar reconstruction for 2-D EIT difference imaging."""

__version__ = "0.1.0"

from .bench import TimingReport, amdahl_speedup, benchmark, fit_p
from .dbar import build_green, build_kgrid, gmres_real, solve_point
from .dnmap import dn_matrix, nd_matrix
from .errors import (
    ConfigError,
    ConvergenceWarning,
    DbarError,
    DegeneratePatternsError,
    GeometryError,
    InputError,
    NumericalError,
)
from .geometry import chest_domain, normalize_domain, unit_disk
from .patterns import bipolar_patterns, pattern_set, project_voltages
from .pipeline import ReconConfig, ReconSequence, prepare, reconstruct, reconstruct_batch, reconstruct_frame, reconstruct_session
from .scattering import texp_dif
from .scenario import SimulateConfig, simulate

__all__ = [
    "ConfigError",
    "ConvergenceWarning",
    "DbarError",
    "DegeneratePatternsError",
    "GeometryError",
    "InputError",
    "NumericalError",
    "ReconConfig",
    "ReconSequence",
    "SimulateConfig",
    "TimingReport",
    "amdahl_speedup",
    "benchmark",
    "bipolar_patterns",
    "build_green",
    "build_kgrid",
    "chest_domain",
    "dn_matrix",
    "fit_p",
    "gmres_real",
    "nd_matrix",
    "normalize_domain",
    "pattern_set",
    "prepare",
    "project_voltages",
    "reconstruct",
    "reconstruct_batch",
    "reconstruct_frame",
    "reconstruct_session",
    "simulate",
    "solve_point",
    "texp_dif",
    "unit_disk",
]
