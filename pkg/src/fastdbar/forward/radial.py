"""Series solution for a centred circular inclusion in the unit disk.

With conductivity ``sigma_in`` for r < rho and 1 outside, the mode
exp(i n theta) is an eigenfunction of the DN map with eigenvalue

    lambda_n = |n| (1 + g rho^(2|n|)) / (1 - g rho^(2|n|)),   g = (sigma_in - 1)/(sigma_in + 1).

Boundary voltages for electrode currents are split into the homogeneous part,
summed in closed form through the Clausen function Cl_2, and the inclusion
correction, whose terms decay like rho^(2n).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from ..errors import InputError

_clausen = np.frompyfunc(lambda x: float(mpmath.clsin(2, x)), 1, 1)


def clausen2(x):
    """Cl_2(x) = sum_{n>=1} sin(n x) / n^2, elementwise."""
    return np.asarray(_clausen(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class RadialPhantom:
    rho: float
    sigma_in: float

    def __post_init__(self):
        if not self.sigma_in > 0:
            raise InputError(f"sigma_in must be positive, got {self.sigma_in}")
        if not (0.0 <= self.rho < 1.0 - 1e-6):
            raise InputError(f"inclusion radius must satisfy 0 <= rho < 1, got {self.rho}")

    @property
    def reflection(self):
        return (self.sigma_in - 1.0) / (self.sigma_in + 1.0)


HOMOGENEOUS = RadialPhantom(rho=0.0, sigma_in=1.0)


def _mu(phantom, n):
    return phantom.reflection * phantom.rho ** (2 * n)


def dn_radial(phantom, max_mode=64):
    """DN eigenvalues lambda_n for n = 1 .. max_mode."""
    n = np.arange(1, max_mode + 1, dtype=float)
    m = _mu(phantom, n)
    return n * (1.0 + m) / (1.0 - m)


@lru_cache(maxsize=32)
def _homogeneous_kernel(angles, half_width):
    th = np.asarray(angles)
    phi = np.mod(th[:, None] - th[None, :], 2.0 * np.pi)
    a = half_width
    # equispaced layouts repeat the same few differences; evaluate each once
    key = np.round(phi, 12)
    _, first, inv = np.unique(key, return_index=True, return_inverse=True)
    rep = phi.ravel()[first]
    s = 0.5 * (clausen2(a + rep) + clausen2(a - rep))
    return s[inv].reshape(phi.shape) / (np.pi * a)


def electrode_kernel(phantom, angles, width, max_mode=64):
    """G[j, l]: voltage at electrode centre j per unit current on electrode l.

    Current is spread uniformly over an arc of angular ``width`` centred on
    each electrode; the voltage carries no constant mode.
    """
    angles = np.asarray(angles, dtype=float)
    a = 0.5 * float(width)
    G = _homogeneous_kernel(tuple(angles.tolist()), a).copy()
    g = phantom.reflection
    if g != 0.0 and phantom.rho > 0.0:
        n = np.arange(1, max_mode + 1, dtype=float)
        m = g * phantom.rho ** (2 * n)
        corr = -2.0 * m / (1.0 + m)
        coef = np.sin(n * a) / (n * n) * corr / (np.pi * a)
        phi = angles[:, None] - angles[None, :]
        G += np.cos(phi[..., None] * n) @ coef
    return G


def _check_disk(geom, tol=1e-9):
    r = np.abs(geom.boundary.complex)
    if np.max(np.abs(r - 1.0)) > tol:
        raise InputError("radial series solver needs the unit disk; use fem_voltages for other domains")


def solve_radial_voltages(phantom, geom, patterns, max_mode=64, width=None):
    """Raw L x N voltages at electrode centres for the raw current patterns."""
    _check_disk(geom)
    angles = geom.electrodes.centers
    if width is None:
        width = 2.0 * np.pi / geom.electrodes.L
    G = electrode_kernel(phantom, angles, width, max_mode)
    return G @ patterns.raw


def trig_density_voltages(phantom, angles, modes):
    """Voltages at ``angles`` for the smooth densities cos(n theta), sin(n theta).

    Returns ``(currents, voltages)``, both of shape (len(angles), 2 * len(modes)).
    """
    angles = np.asarray(angles, dtype=float)
    modes = np.asarray(modes)
    lam = np.array([dn_radial(phantom, int(n))[-1] for n in modes])
    cur = np.hstack([np.cos(np.outer(angles, modes)), np.sin(np.outer(angles, modes))])
    vol = cur / np.concatenate([lam, lam])
    return cur, vol
