"""Bipolar current patterns, their weighted orthonormal basis, and voltage projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePatternsError, InputError


@dataclass(frozen=True, eq=False)
class CurrentPatternSet:
    """Raw skip-``skip`` patterns and their orthonormalised basis.

    ``transform`` is the upper-triangular ``N x N`` matrix with
    ``basis = raw @ transform``; voltages measured under the raw patterns are
    mapped to the basis with the same matrix.
    """

    L: int
    skip: int
    amplitude: float
    raw: np.ndarray
    basis: np.ndarray
    weights: np.ndarray
    transform: np.ndarray

    @property
    def N(self):
        return self.raw.shape[1]


@dataclass(frozen=True, eq=False)
class VoltageFrame:
    """Voltages in the orthonormal basis: row = electrode, column = pattern."""

    values: np.ndarray
    frame_index: int = 0
    timestamp: float | None = None


def bipolar_patterns(L, skip=0, amplitude=1.0):
    """Pairwise-injection patterns skipping ``skip`` electrodes.

    Pattern ``m`` drives ``+amplitude`` into electrode ``m`` and
    ``-amplitude`` into electrode ``m + skip + 1`` (mod L), for
    ``m = 0 .. N-1`` with ``N = L - skip - 1``.
    """
    if L < 4:
        raise InputError(f"need at least 4 electrodes, got L={L}")
    if skip < 0 or skip > L - 3:
        raise InputError(f"skip must satisfy 0 <= skip <= L-3, got skip={skip} for L={L}")
    if not amplitude > 0:
        raise InputError(f"amplitude must be positive, got {amplitude}")
    N = L - skip - 1
    J = np.zeros((L, N))
    m = np.arange(N)
    J[m, m] = amplitude
    J[(m + skip + 1) % L, m] = -amplitude
    return J


def _sign_fix(q, tol=1e-12):
    scale = np.max(np.abs(q)) if q.size else 1.0
    nz = np.flatnonzero(np.abs(q) > tol * scale)
    return -1.0 if q[nz[0]] < 0 else 1.0


def orthonormalize(raw, weights, return_transform=False):
    """Weighted modified Gram-Schmidt, columns processed left to right.

    Output columns are orthonormal under ``sum_l w_l u_l v_l`` and the first
    nonzero entry of each column is positive.
    """
    raw = np.asarray(raw, dtype=float)
    w = np.asarray(weights, dtype=float)
    if raw.ndim != 2 or w.shape != (raw.shape[0],):
        raise InputError(f"weights of shape {w.shape} do not match patterns {raw.shape}")
    if np.any(w <= 0):
        raise InputError("inner-product weights must be positive")
    L, N = raw.shape
    Q = raw.copy()
    T = np.eye(N)
    ref = np.sqrt(np.max(np.sum(w[:, None] * raw * raw, axis=0))) if N else 1.0
    for j in range(N):
        for i in range(j):
            r = np.dot(w * Q[:, i], Q[:, j])
            Q[:, j] -= r * Q[:, i]
            T[:, j] -= r * T[:, i]
        nrm = np.sqrt(np.dot(w * Q[:, j], Q[:, j]))
        if nrm < 1e-12 * max(ref, 1.0):
            raise DegeneratePatternsError(f"pattern {j} is linearly dependent on earlier patterns (pivot {nrm:.3e})")
        f = _sign_fix(Q[:, j]) / nrm
        Q[:, j] *= f
        T[:, j] *= f
    if return_transform:
        return Q, T
    return Q


def pattern_set(L, skip, amplitude, weights):
    raw = bipolar_patterns(L, skip, amplitude)
    basis, T = orthonormalize(raw, weights, return_transform=True)
    for a in (raw, basis, T):
        a.setflags(write=False)
    w = np.array(weights, dtype=float)
    w.setflags(write=False)
    return CurrentPatternSet(L=L, skip=skip, amplitude=float(amplitude), raw=raw, basis=basis, weights=w, transform=T)


def project_voltages(raw_voltages, patterns, frame_index=0, timestamp=None):
    """Map raw voltages into the orthonormal basis and remove each column's weighted mean."""
    V = np.asarray(raw_voltages, dtype=float)
    if V.shape != patterns.raw.shape:
        raise InputError(f"voltage matrix has shape {V.shape}, expected {patterns.raw.shape}")
    Vb = V @ patterns.transform
    w = patterns.weights
    Vb = Vb - (w @ Vb) / w.sum()
    return VoltageFrame(values=Vb, frame_index=int(frame_index), timestamp=timestamp)
