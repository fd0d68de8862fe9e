"""D-bar equation on the k-grid: FFT Cauchy transform and real-linear GMRES.

For a fixed z the unknown mu(z, .) satisfies

    mu - A_R( rho * conj(mu) ) = 1,   rho(k) = t(k) / (4 pi conj(k)) * e_{-z}(k),

where A_R is convolution with beta(k) = 1 / (pi k) evaluated by FFT.  The map
is only real-linear, so GMRES runs on the stacked vector [Re mu; Im mu].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import ConvergenceWarning, InputError
from .krylov import gmres

SINGULAR_K = 1e-14


@dataclass(frozen=True, eq=False)
class KGrid:
    """Uniform M x M grid on [-s, s]^2 with step h = 2s/(M-1).

    ``points[i, j] = (-s + i h) + 1j (-s + j h)``.
    """

    s: float
    n: int
    M: int
    h: float
    points: np.ndarray
    has_origin: bool

    @property
    def shape(self):
        return (self.M, self.M)

    def disk_mask(self, R):
        return np.abs(self.points) <= R

    @property
    def mask(self):
        return self.disk_mask(self.s)


def build_kgrid(s=3.8, n=4, R=None):
    if n < 2:
        raise InputError(f"grid exponent n must be >= 2, got {n}")
    if R is not None and s < R:
        raise InputError(f"k-grid half-width s={s} < R={R}: truncated scattering would be clipped")
    M = 2**n
    h = 2.0 * s / (M - 1)
    x = -s + h * np.arange(M)
    pts = x[:, None] + 1j * x[None, :]
    pts.setflags(write=False)
    origin = bool(np.any(np.abs(pts) < SINGULAR_K))
    return KGrid(s=float(s), n=int(n), M=M, h=h, points=pts, has_origin=origin)


@dataclass(frozen=True, eq=False)
class GreenFFT:
    """FFT of beta(k) = 1/(pi k) sampled at lattice offsets, beta(0) = 0.

    In circular mode the offsets wrap on the M x M torus (circular convolution);
    in padded mode they cover -M .. M-1 on a 2M x 2M grid so the discrete sum
    is evaluated without wrap-around.  ``kernel`` is ``h**2 * beta_hat``.
    """

    beta: np.ndarray
    beta_hat: np.ndarray
    kernel: np.ndarray
    padded: bool
    M: int
    h: float


def build_green(kgrid, padded=False):
    M, h = kgrid.M, kgrid.h
    P = 2 * M if padded else M
    half = M if padded else M // 2
    off = np.arange(P)
    off = np.where(off < half, off, off - P)
    lattice = h * (off[:, None] + 1j * off[None, :])
    beta = np.zeros((P, P), dtype=complex)
    nz = lattice != 0
    beta[nz] = 1.0 / (np.pi * lattice[nz])
    beta_hat = sfft.fft2(beta)
    kernel = h * h * beta_hat
    for a in (beta, beta_hat, kernel):
        a.setflags(write=False)
    return GreenFFT(beta=beta, beta_hat=beta_hat, kernel=kernel, padded=padded, M=M, h=h)


def apply_cauchy(w, g):
    """h^2 IFFT(FFT(beta) * FFT(w)); padded mode embeds w in the 2M grid and crops."""
    M = g.M
    if w.shape != (M, M):
        raise InputError(f"field of shape {w.shape} does not match the {M}x{M} grid")
    if g.padded:
        return sfft.ifft2(g.kernel * sfft.fft2(w, s=(2 * M, 2 * M)))[:M, :M]
    return sfft.ifft2(g.kernel * sfft.fft2(w))


@dataclass(frozen=True, eq=False)
class MultiplierField:
    """rho(z, k) for every z of the mesh (axis 0) and every grid k."""

    rho: np.ndarray
    zmesh: np.ndarray


def multiplier_field(t, zmesh):
    """rho(z, k) = t(k) / (4 pi conj k) * exp(-i (k z + conj(k z))) for all z at once."""
    k = t.kgrid.points
    z = np.asarray(zmesh, dtype=complex).ravel()
    tv = t.values
    live = (tv != 0) & (np.abs(k) >= SINGULAR_K)
    base = np.zeros_like(tv)
    base[live] = tv[live] / (4.0 * np.pi * np.conj(k[live]))
    phase = k.real[None] * z.real[:, None, None] - k.imag[None] * z.imag[:, None, None]
    rho = base[None] * np.exp(-2j * phase)
    return MultiplierField(rho=rho, zmesh=z)


def dbar_operator(mu, rho, g):
    return mu - apply_cauchy(rho * np.conj(mu), g)


def _stack(f):
    return np.concatenate([f.real.ravel(), f.imag.ravel()])


def _unstack(x, M):
    n = M * M
    return (x[:n] + 1j * x[n:]).reshape(M, M)


@dataclass
class MuField:
    mu: np.ndarray
    mu0: complex
    sigma: float
    sigma_imag: float
    iterations: int
    residual: float
    converged: bool


def gmres_real(mu0, rho, g, tol=1e-4, maxit=20, warn=True):
    """Solve [I - A_R T_R conj] mu = 1 by GMRES on the real-stacked system.

    Returns ``(mu, GMRESResult)``.
    """
    M = g.M
    b = _stack(np.ones((M, M), dtype=complex))
    if mu0 is None:
        x0 = b.copy()
    else:
        x0 = _stack(np.asarray(mu0, dtype=complex))

    def apply(x):
        return _stack(dbar_operator(_unstack(x, M), rho, g))

    res = gmres(apply, b, x0, tol=tol, maxit=maxit)
    if warn and not res.converged:
        warnings.warn(
            f"GMRES stopped after {res.iterations} iterations at relative residual {res.residual:.3e} > {tol:.1e}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return _unstack(res.x, M), res


def quadrature_weights(kgrid, t):
    """Per-k weights -h^2/(pi k) used to evaluate mu(z, 0); zero where t vanishes."""
    k = kgrid.points
    tv = t.values if hasattr(t, "values") else t
    singular = (np.abs(k) < SINGULAR_K) & (tv != 0)
    if np.any(singular):
        warnings.warn("k = 0 lies on the grid with nonzero scattering data; excluded from the mu(z,0) quadrature", RuntimeWarning, stacklevel=2)
    q = np.zeros(k.shape, dtype=complex)
    live = (tv != 0) & (np.abs(k) >= SINGULAR_K)
    q[live] = -kgrid.h**2 / (np.pi * k[live])
    return q


def eval_sigma(mu, rho_z, qweights):
    """mu(z, 0) from the integral equation at s = 0, then sigma = Re(mu0^2)."""
    mu0 = 1.0 + np.sum(qweights * rho_z * np.conj(mu))
    sq = mu0 * mu0
    return complex(mu0), float(sq.real), float(sq.imag)


def solve_point(rho_z, g, qweights, tol=1e-4, maxit=20, mu_init=None):
    """Full per-z task: GMRES solve followed by the sigma evaluation."""
    mu, res = gmres_real(mu_init, rho_z, g, tol=tol, maxit=maxit, warn=False)
    mu0, sig, sig_im = eval_sigma(mu, rho_z, qweights)
    return MuField(mu=mu, mu0=mu0, sigma=sig, sigma_imag=sig_im, iterations=res.iterations, residual=res.residual, converged=res.converged)


def write_mu_csv(path, kgrid, mu):
    k = kgrid.points.ravel()
    m = np.asarray(mu).ravel()
    data = np.column_stack([k.real, k.imag, m.real, m.imag])
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header="k_re,k_im,mu_re,mu_im", comments="")
