"""Linearised difference scattering transform on the truncated k-disk."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .geometry import electrode_quadrature


@dataclass(frozen=True, eq=False)
class ExpCoeffs:
    """Basis coefficients of exp(ikz) (``c``) and exp(i conj(k) conj(z)) (``d``).

    One row per entry of ``kpoints``; ``mask`` (optional) records which k-grid
    points the rows correspond to.
    """

    kpoints: np.ndarray
    c: np.ndarray
    d: np.ndarray
    mask: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class ScatteringField:
    kgrid: object
    values: np.ndarray
    R: float


def exp_coeffs(kpoints, geom, patterns, mask=None):
    k = np.asarray(kpoints, dtype=complex).ravel()
    z = geom.electrodes.positions
    w = electrode_quadrature(geom).weights
    WJ = w[:, None] * patterns.basis
    E = np.exp(1j * np.outer(k, z))
    c = E @ WJ
    d = np.exp(1j * np.outer(np.conj(k), np.conj(z))) @ WJ
    return ExpCoeffs(kpoints=k, c=c, d=d, mask=mask)


def grid_coeffs(kgrid, R, geom, patterns):
    """Coefficients for every grid point with |k| <= R (row-major order)."""
    mask = kgrid.disk_mask(R)
    return exp_coeffs(kgrid.points[mask], geom, patterns, mask=mask)


def texp_pointwise(L_d, L_ref, coeffs):
    """t(k) = d(k)^T (L_d - L_ref) c(k) for each row of the coefficient tables."""
    D = np.asarray(L_d.entries) - np.asarray(L_ref.entries)
    N = coeffs.c.shape[1]
    if D.shape != (N, N):
        raise InputError(f"DN matrices of shape {D.shape} do not match a basis of size {N}")
    return np.einsum("kj,jm,km->k", coeffs.d, D, coeffs.c, optimize=True)


def texp_dif(L_d, L_ref, coeffs, kgrid, R):
    """Scattering field on ``kgrid``: zero outside |k| <= R."""
    mask = coeffs.mask if coeffs.mask is not None else kgrid.disk_mask(R)
    if mask.sum() != len(coeffs.kpoints):
        raise InputError("coefficient table does not match the k-grid mask")
    values = np.zeros(kgrid.shape, dtype=complex)
    values[mask] = texp_pointwise(L_d, L_ref, coeffs)
    values[~kgrid.disk_mask(R)] = 0.0
    return ScatteringField(kgrid=kgrid, values=values, R=float(R))


def write_texp_csv(path, field):
    k = field.kgrid.points.ravel()
    t = field.values.ravel()
    data = np.column_stack([k.real, k.imag, t.real, t.imag])
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header="k_re,k_im,t_re,t_im", comments="")
