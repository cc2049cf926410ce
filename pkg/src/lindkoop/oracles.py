"""Independent reference computations used to check the main code paths.

Nothing here calls the closed-form estimator or the RK4 propagator.
"""

from __future__ import annotations

import numpy as np


def rrr_pgd(x, y, rank, reg, starts=50, iters=20000, tol=1e-14, seed=0):
    """Best objective of projected gradient descent over rank-``rank`` matrices.

    Runs ``starts`` random initializations in a batch; each iteration takes a
    gradient step of size ``1/L`` and truncates back to rank ``rank`` by SVD.

    Returns
    -------
    best_T : (dim, dim) array
    best_obj : float
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, dim = x.shape
    cx = x.T @ x / n + reg * np.eye(dim)
    cyx = y.T @ x / n
    lipschitz = 2.0 * np.linalg.eigvalsh(cx)[-1]
    step = 1.0 / lipschitz
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((starts, dim, dim))

    def project(M):
        U, s, Vt = np.linalg.svd(M)
        s[:, rank:] = 0.0
        return (U * s[:, None, :]) @ Vt

    def objective(M):
        resid = y[None] - x[None] @ np.swapaxes(M, 1, 2)
        return np.sum(resid**2, axis=(1, 2)) / n + reg * np.sum(M**2, axis=(1, 2))

    T = project(T)
    prev = objective(T)
    for _ in range(iters):
        grad = 2.0 * (T @ cx - cyx[None])
        T = project(T - step * grad)
        cur = objective(T)
        if np.max(prev - cur) < tol:
            prev = cur
            break
        prev = cur
    best = int(np.argmin(prev))
    return T[best], float(prev[best])


def dephasing_coherence(rho01_0: complex, gamma: float, t):
    """Closed-form off-diagonal element of a single qubit under pure dephasing
    ``L = sqrt(gamma/2) Z`` with no Hamiltonian: ``rho01(t) = rho01(0) exp(-gamma t)``."""
    return rho01_0 * np.exp(-gamma * np.asarray(t, dtype=float))
