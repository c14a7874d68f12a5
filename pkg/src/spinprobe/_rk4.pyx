# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 stepping for nearest-neighbour (birth-death) rate chains.

up[i]   : rate i -> i+1, i = 0..n-2
down[i] : rate i+1 -> i, i = 0..n-2
"""
import numpy as np

cdef inline void _deriv(const double* up, const double* down,
                        const double* p, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = 0.0
    for i in range(n - 1):
        # upward flow i -> i+1, downward flow i+1 -> i
        out[i] -= up[i] * p[i]
        out[i + 1] += up[i] * p[i]
        out[i + 1] -= down[i] * p[i + 1]
        out[i] += down[i] * p[i + 1]


cdef void _integrate(const double* up, const double* down, double* p, Py_ssize_t n,
                     double h, Py_ssize_t nsteps) noexcept nogil:
    cdef Py_ssize_t s, i
    cdef double k1[64]
    cdef double k2[64]
    cdef double k3[64]
    cdef double k4[64]
    cdef double tmp[64]
    for s in range(nsteps):
        _deriv(up, down, p, k1, n)
        for i in range(n):
            tmp[i] = p[i] + 0.5 * h * k1[i]
        _deriv(up, down, tmp, k2, n)
        for i in range(n):
            tmp[i] = p[i] + 0.5 * h * k2[i]
        _deriv(up, down, tmp, k3, n)
        for i in range(n):
            tmp[i] = p[i] + h * k3[i]
        _deriv(up, down, tmp, k4, n)
        for i in range(n):
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def rk4_chain(up, down, p0, double h, Py_ssize_t nsteps):
    cdef double[::1] u = np.ascontiguousarray(up, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(down, dtype=np.float64)
    out = np.array(p0, dtype=np.float64, copy=True)
    cdef double[::1] p = out
    if p.shape[0] > 64 or u.shape[0] != p.shape[0] - 1 or d.shape[0] != p.shape[0] - 1:
        raise ValueError("bad chain dimensions")
    with nogil:
        _integrate(&u[0], &d[0], &p[0], p.shape[0], h, nsteps)
    return out


def rk4_chain_batch(up, down, p0, h, nsteps):
    cdef double[:, ::1] u = np.ascontiguousarray(up, dtype=np.float64)
    cdef double[:, ::1] d = np.ascontiguousarray(down, dtype=np.float64)
    out = np.array(p0, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] p = out
    cdef double[::1] hh = np.ascontiguousarray(h, dtype=np.float64)
    cdef long long[::1] ns = np.ascontiguousarray(nsteps, dtype=np.int64)
    cdef Py_ssize_t k
    if p.shape[1] > 64 or u.shape[1] != p.shape[1] - 1 or d.shape[1] != p.shape[1] - 1:
        raise ValueError("bad chain dimensions")
    with nogil:
        for k in range(p.shape[0]):
            _integrate(&u[k, 0], &d[k, 0], &p[k, 0], p.shape[1], hh[k], ns[k])
    return out
