"""Pure-numpy RK4 stepping of the Lindblad generator (fallback backend)."""

from __future__ import annotations

import numpy as np


def rk4_evolve(heff, jumps, rho, h, nsteps):
    """Advance ``rho`` by ``nsteps`` classical RK4 steps of size ``h``.

    The generator is written as ``-i Heff rho + i rho Heff^H + sum_k L_k rho L_k^H``
    with ``Heff = H - (i/2) sum_k L_k^H L_k``.
    """
    heff = np.asarray(heff, dtype=complex)
    heff_dag = heff.conj().T
    jumps = [np.asarray(L, dtype=complex) for L in jumps]
    jumps_dag = [L.conj().T for L in jumps]

    def rhs(r):
        out = -1j * (heff @ r) + 1j * (r @ heff_dag)
        for L, Ld in zip(jumps, jumps_dag):
            out += L @ r @ Ld
        return out

    r = np.array(rho, dtype=complex, copy=True)
    half = 0.5 * h
    sixth = h / 6.0
    for _ in range(nsteps):
        k1 = rhs(r)
        k2 = rhs(r + half * k1)
        k3 = rhs(r + half * k2)
        k4 = rhs(r + h * k3)
        r = r + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return r
