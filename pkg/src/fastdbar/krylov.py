"""Full-memory GMRES for real vectors with a matrix-free operator.

Kept deliberately small: no restarts, no preconditioner, no argument
checking inside the iteration.  Orthogonalisation is classical Gram-Schmidt
with one reorthogonalisation pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalError


@dataclass
class GMRESResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool


def gmres(apply, b, x0, tol=1e-4, maxit=20):
    """Solve ``apply(x) = b`` to relative residual ``tol``.

    ``iterations`` counts Arnoldi steps (operator applications beyond the
    initial residual).  ``residual`` is the relative residual estimate from
    the Givens-rotated Hessenberg system.
    """
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        bnorm = 1.0
    r = b - apply(x0)
    beta = np.linalg.norm(r)
    if not np.isfinite(beta):
        raise NumericalError("non-finite initial residual")
    res = beta / bnorm
    if res <= tol:
        return GMRESResult(x0, 0, res, True)
    n = b.shape[0]
    V = np.empty((maxit + 1, n))
    H = np.zeros((maxit + 1, maxit))
    cs = np.zeros(maxit)
    sn = np.zeros(maxit)
    g = np.zeros(maxit + 1)
    g[0] = beta
    V[0] = r / beta
    k = 0
    for j in range(maxit):
        w = np.array(apply(V[j]), dtype=float)
        Vj = V[: j + 1]
        h = Vj @ w
        w -= h @ Vj
        h2 = Vj @ w
        w -= h2 @ Vj
        h += h2
        hn = np.linalg.norm(w)
        if not np.isfinite(hn):
            raise NumericalError("non-finite Krylov vector")
        col = np.empty(j + 2)
        col[: j + 1] = h
        col[j + 1] = hn
        for i in range(j):
            a, c = col[i], col[i + 1]
            col[i] = cs[i] * a + sn[i] * c
            col[i + 1] = -sn[i] * a + cs[i] * c
        den = np.hypot(col[j], col[j + 1])
        cs[j] = col[j] / den
        sn[j] = col[j + 1] / den
        col[j] = den
        col[j + 1] = 0.0
        H[: j + 2, j] = col
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        k = j + 1
        res = abs(g[j + 1]) / bnorm
        if res <= tol or hn <= 1e-14 * bnorm:
            break
        V[j + 1] = w / hn
    y = solve_triangular(H[:k, :k], g[:k])
    x = x0 + y @ V[:k]
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite GMRES iterate")
    return GMRESResult(x, k, float(res), bool(res <= tol))
