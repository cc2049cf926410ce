"""RK4 propagation of the Lindblad equation with a selectable backend.

The compiled extension ``lindkoop._rk4`` is used when it imports; otherwise
the numpy implementation in ``lindkoop._rk4_py`` takes over. Setting the
environment variable ``LINDKOOP_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _rk4_py

try:
    from . import _rk4 as _compiled
except ImportError:  # extension not built
    _compiled = None

AVAILABLE_BACKENDS = ("compiled", "python") if _compiled is not None else ("python",)


def default_backend() -> str:
    requested = os.environ.get("LINDKOOP_BACKEND", "").strip().lower()
    if requested == "python" or _compiled is None:
        return "python"
    if requested not in ("", "compiled"):
        raise ValueError(f"unknown LINDKOOP_BACKEND {requested!r}")
    return "compiled"


BACKEND = default_backend()


def _coo(a: np.ndarray):
    rows, cols = np.nonzero(a)
    return rows.astype(np.intp), cols.astype(np.intp), a[rows, cols].astype(complex)


class Propagator:
    """Fixed-step RK4 integrator for ``drho/dt = L[rho]``.

    Parameters
    ----------
    hamiltonian : (d, d) complex array
    collapse_ops : sequence of (d, d) complex arrays
    backend : {"compiled", "python"}, optional
        Defaults to the module-level selection ``BACKEND``.
    """

    def __init__(self, hamiltonian, collapse_ops, backend: str | None = None):
        backend = backend or BACKEND
        if backend not in AVAILABLE_BACKENDS:
            raise ValueError(f"backend {backend!r} not available; have {AVAILABLE_BACKENDS}")
        self.backend = backend
        h = np.asarray(hamiltonian, dtype=complex)
        jumps = [np.asarray(L, dtype=complex) for L in collapse_ops]
        dim = h.shape[0]
        loss = np.zeros_like(h)
        for L in jumps:
            loss += L.conj().T @ L
        self.heff = h - 0.5j * loss
        self.jumps = [L for L in jumps if np.any(L)]
        self.dim = dim
        if backend == "compiled":
            self._h_coo = _coo(self.heff)
            rows, cols, vals, ptr = [], [], [], [0]
            for L in self.jumps:
                r, c, v = _coo(L)
                rows.append(r)
                cols.append(c)
                vals.append(v)
                ptr.append(ptr[-1] + len(r))
            self._j_coo = (
                np.asarray(ptr, dtype=np.intp),
                np.concatenate(rows) if rows else np.zeros(0, dtype=np.intp),
                np.concatenate(cols) if cols else np.zeros(0, dtype=np.intp),
                np.concatenate(vals) if vals else np.zeros(0, dtype=complex),
            )

    def evolve(self, rho: np.ndarray, h: float, nsteps: int) -> np.ndarray:
        """Return ``rho`` advanced by ``nsteps`` RK4 steps of size ``h``."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise ValueError(f"state shape {rho.shape} does not match dim {self.dim}")
        if self.backend == "compiled":
            return _compiled.rk4_evolve_coo(rho, float(h), int(nsteps), *self._h_coo, *self._j_coo)
        return _rk4_py.rk4_evolve(self.heff, self.jumps, rho, h, nsteps)
