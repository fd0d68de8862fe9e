"""Discrete Neumann-to-Dirichlet matrix from one voltage frame and its inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .geometry import electrode_quadrature

MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class NDMatrix:
    entries: np.ndarray
    frame_index: int = 0

    @property
    def condition(self):
        return float(np.linalg.cond(self.entries))


@dataclass(frozen=True, eq=False)
class DNMatrix:
    entries: np.ndarray
    frame_index: int = 0
    condition: float = float("nan")


def nd_matrix(patterns, frame, geom):
    """R(m, n) = (1/A) sum_l ds_l J^m_l V^n_l on the orthonormal basis."""
    V = frame.values
    J = patterns.basis
    if V.shape != J.shape:
        raise InputError(f"frame shape {V.shape} does not match basis {J.shape}")
    w = electrode_quadrature(geom).weights
    if len(w) != J.shape[0]:
        raise InputError("geometry electrode count does not match the pattern set")
    R = J.T @ (w[:, None] * V)
    return NDMatrix(entries=R, frame_index=frame.frame_index)


def dn_from_nd(R, symmetrize=True):
    """Invert the ND matrix to the DN matrix, optionally symmetrising first."""
    A = np.asarray(R.entries, dtype=float)
    if symmetrize:
        A = 0.5 * (A + A.T)
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"ND matrix of frame {R.frame_index} has non-finite entries", frame_index=R.frame_index)
    cond = float(np.linalg.cond(A))
    if not cond < MAX_CONDITION:
        raise NumericalError(f"ND matrix of frame {R.frame_index} is ill-conditioned (condition number {cond:.3e})", frame_index=R.frame_index)
    L = np.linalg.solve(A, np.eye(len(A)))
    if symmetrize:
        L = 0.5 * (L + L.T)
    return DNMatrix(entries=L, frame_index=R.frame_index, condition=cond)


def dn_matrix(patterns, frame, geom, symmetrize=True):
    return dn_from_nd(nd_matrix(patterns, frame, geom), symmetrize=symmetrize)


def write_matrix_csv(path, M):
    np.savetxt(path, np.asarray(M), delimiter=",", fmt="%.17g")


def read_matrix_csv(path):
    return np.atleast_2d(np.loadtxt(path, delimiter=","))
