# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 stepping of the Lindblad generator.

Operators arrive as coordinate lists of their nonzero entries; the density
matrix stays dense. Spin-chain Hamiltonians and dephasing operators have
O(dim) nonzeros, so one generator evaluation costs O(nnz * dim) instead of
O(dim**3).
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


cdef void _rhs(const cplx[:, ::1] r, cplx[:, ::1] out, cplx[:, ::1] tmp,
               const Py_ssize_t[::1] h_row, const Py_ssize_t[::1] h_col,
               const cplx[::1] h_val,
               const Py_ssize_t[::1] j_ptr, const Py_ssize_t[::1] j_row,
               const Py_ssize_t[::1] j_col, const cplx[::1] j_val) noexcept nogil:
    cdef Py_ssize_t d = r.shape[0]
    cdef Py_ssize_t e, i, k, a, b, op, start, stop
    cdef cplx v, w
    cdef cplx I = 1j

    for i in range(d):
        for k in range(d):
            out[i, k] = 0

    # -i Heff r  and  +i r Heff^H
    for e in range(h_row.shape[0]):
        a = h_row[e]
        b = h_col[e]
        v = -I * h_val[e]
        w = I * h_val[e].conjugate()
        for k in range(d):
            out[a, k] = out[a, k] + v * r[b, k]
        for i in range(d):
            out[i, a] = out[i, a] + w * r[i, b]

    # sum_k L_k r L_k^H, via tmp = L_k r
    for op in range(j_ptr.shape[0] - 1):
        start = j_ptr[op]
        stop = j_ptr[op + 1]
        if start == stop:
            continue
        for i in range(d):
            for k in range(d):
                tmp[i, k] = 0
        for e in range(start, stop):
            a = j_row[e]
            b = j_col[e]
            v = j_val[e]
            for k in range(d):
                tmp[a, k] = tmp[a, k] + v * r[b, k]
        for e in range(start, stop):
            a = j_row[e]
            b = j_col[e]
            w = j_val[e].conjugate()
            for i in range(d):
                out[i, a] = out[i, a] + w * tmp[i, b]


def rk4_evolve_coo(rho, double h, Py_ssize_t nsteps,
                   h_row, h_col, h_val, j_ptr, j_row, j_col, j_val):
    """Advance a dense ``rho`` by ``nsteps`` RK4 steps of size ``h``."""
    cdef cplx[:, ::1] r = np.array(rho, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t d = r.shape[0]
    cdef cplx[:, ::1] stage = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] acc = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] kk = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] tmp = np.empty((d, d), dtype=np.complex128)
    cdef const Py_ssize_t[::1] hr = np.ascontiguousarray(h_row, dtype=np.intp)
    cdef const Py_ssize_t[::1] hc = np.ascontiguousarray(h_col, dtype=np.intp)
    cdef const cplx[::1] hv = np.ascontiguousarray(h_val, dtype=np.complex128)
    cdef const Py_ssize_t[::1] jp = np.ascontiguousarray(j_ptr, dtype=np.intp)
    cdef const Py_ssize_t[::1] jr = np.ascontiguousarray(j_row, dtype=np.intp)
    cdef const Py_ssize_t[::1] jc = np.ascontiguousarray(j_col, dtype=np.intp)
    cdef const cplx[::1] jv = np.ascontiguousarray(j_val, dtype=np.complex128)
    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef Py_ssize_t step, i, k

    with nogil:
        for step in range(nsteps):
            # k1
            _rhs(r, kk, tmp, hr, hc, hv, jp, jr, jc, jv)
            for i in range(d):
                for k in range(d):
                    acc[i, k] = kk[i, k]
                    stage[i, k] = r[i, k] + half * kk[i, k]
            # k2
            _rhs(stage, kk, tmp, hr, hc, hv, jp, jr, jc, jv)
            for i in range(d):
                for k in range(d):
                    acc[i, k] = acc[i, k] + 2.0 * kk[i, k]
                    stage[i, k] = r[i, k] + half * kk[i, k]
            # k3
            _rhs(stage, kk, tmp, hr, hc, hv, jp, jr, jc, jv)
            for i in range(d):
                for k in range(d):
                    acc[i, k] = acc[i, k] + 2.0 * kk[i, k]
                    stage[i, k] = r[i, k] + h * kk[i, k]
            # k4
            _rhs(stage, kk, tmp, hr, hc, hv, jp, jr, jc, jv)
            for i in range(d):
                for k in range(d):
                    r[i, k] = r[i, k] + sixth * (acc[i, k] + kk[i, k])
    return np.asarray(r)
