# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-iteration kernels.

Same contract as ``_kernels_py``: all inputs C-contiguous complex128
(``w`` float64, ``active`` uint8). Small dense loops, no BLAS; the matrices
here are a handful of antennas wide, where call overhead dominates.
"""

import numpy as np
from libc.math cimport log, sqrt

from .hermitian import NotPositiveDefiniteError

ctypedef double complex cplx

BACKEND = "cython"


cdef inline double _abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _chol(cplx* a, Py_ssize_t n) noexcept nogil:
    # in-place lower Cholesky, row-major; reads the lower triangle only
    cdef Py_ssize_t i, j, k
    cdef double d
    cdef cplx s
    for j in range(n):
        d = a[j * n + j].real
        for k in range(j):
            d -= _abs2(a[j * n + k])
        if not d > 0.0:
            return -1
        d = sqrt(d)
        a[j * n + j] = d
        for i in range(j + 1, n):
            s = a[i * n + j]
            for k in range(j):
                s = s - a[i * n + k] * a[j * n + k].conjugate()
            a[i * n + j] = s / d
    return 0


cdef int _inv_logdet(const cplx* a, cplx* c, cplx* m, cplx* out,
                     Py_ssize_t n, double* logdet) noexcept nogil:
    """out = a^{-1}, logdet = log|a|; c, m are n*n scratch buffers."""
    cdef Py_ssize_t i, j, k, lo
    cdef double ld = 0.0
    cdef cplx s
    for i in range(n * n):
        c[i] = a[i]
    if _chol(c, n) < 0:
        return -1
    for j in range(n):
        ld += log(c[j * n + j].real)
    logdet[0] = 2.0 * ld
    # m = C^{-1}, lower triangular
    for j in range(n):
        for i in range(n):
            m[i * n + j] = 0.0
        m[j * n + j] = 1.0 / c[j * n + j].real
        for i in range(j + 1, n):
            s = 0.0
            for k in range(j, i):
                s = s + c[i * n + k] * m[k * n + j]
            m[i * n + j] = -s / c[i * n + i].real
    # out = m^H m
    for i in range(n):
        for j in range(i + 1):
            s = 0.0
            lo = i if i > j else j
            for k in range(lo, n):
                s = s + m[k * n + i].conjugate() * m[k * n + j]
            out[i * n + j] = s
            out[j * n + i] = s.conjugate()
        out[i * n + i] = out[i * n + i].real
    return 0


def interference_cov(const cplx[:, :, :, ::1] G, const cplx[:, :, ::1] S,
                     const unsigned char[:, ::1] active):
    cdef Py_ssize_t L = G.shape[0]
    cdef Py_ssize_t R = G.shape[2]
    cdef Py_ssize_t T = G.shape[3]
    out = np.zeros((L, R, R), dtype=np.complex128)
    cdef cplx[:, :, ::1] o = out
    cdef cplx[:, ::1] tmp = np.empty((R, T), dtype=np.complex128)
    cdef Py_ssize_t l, k, i, j, m
    cdef cplx s
    with nogil:
        for l in range(L):
            for k in range(L):
                if not active[l, k]:
                    continue
                for i in range(R):
                    for j in range(T):
                        s = 0.0
                        for m in range(T):
                            s = s + G[l, k, i, m] * S[k, m, j]
                        tmp[i, j] = s
                for i in range(R):
                    for j in range(i + 1):
                        s = 0.0
                        for m in range(T):
                            s = s + tmp[i, m] * G[l, k, j, m].conjugate()
                        o[l, i, j] = o[l, i, j] + s
            for i in range(R):
                o[l, i, i] = o[l, i, i].real + 1.0
                for j in range(i):
                    o[l, j, i] = o[l, i, j].conjugate()
    return out


def dual_map(const cplx[:, :, ::1] Hd, const cplx[:, :, ::1] S,
             const cplx[:, :, ::1] Omega, const double[::1] w):
    cdef Py_ssize_t L = Hd.shape[0]
    cdef Py_ssize_t R = Hd.shape[1]
    cdef Py_ssize_t T = Hd.shape[2]
    lam_arr = np.empty((L, R, R), dtype=np.complex128)
    rates_arr = np.empty(L, dtype=np.float64)
    cdef cplx[:, :, ::1] lam = lam_arr
    cdef double[::1] rates = rates_arr
    cdef cplx[:, ::1] tmp = np.empty((R, T), dtype=np.complex128)
    cdef cplx[::1] A = np.empty(R * R, dtype=np.complex128)
    cdef cplx[::1] c = np.empty(R * R, dtype=np.complex128)
    cdef cplx[::1] m = np.empty(R * R, dtype=np.complex128)
    cdef cplx[::1] inv_o = np.empty(R * R, dtype=np.complex128)
    cdef cplx[::1] inv_a = np.empty(R * R, dtype=np.complex128)
    cdef Py_ssize_t l, i, j, k
    cdef cplx s
    cdef double ld_o = 0.0, ld_a = 0.0
    cdef Py_ssize_t bad = -1
    with nogil:
        for l in range(L):
            for i in range(R):
                for j in range(T):
                    s = 0.0
                    for k in range(T):
                        s = s + Hd[l, i, k] * S[l, k, j]
                    tmp[i, j] = s
            for i in range(R):
                for j in range(i + 1):
                    s = Omega[l, i, j]
                    for k in range(T):
                        s = s + tmp[i, k] * Hd[l, j, k].conjugate()
                    A[i * R + j] = s
            if _inv_logdet(&Omega[l, 0, 0], &c[0], &m[0], &inv_o[0], R, &ld_o) < 0:
                bad = l
                break
            if _inv_logdet(&A[0], &c[0], &m[0], &inv_a[0], R, &ld_a) < 0:
                bad = l
                break
            for i in range(R * R):
                lam[l, i // R, i % R] = w[l] * (inv_o[i] - inv_a[i])
            rates[l] = ld_a - ld_o
    if bad >= 0:
        raise NotPositiveDefiniteError(
            f"Cholesky factorization failed for link {bad}")
    return lam_arr, rates_arr


def normalize_psd(const cplx[:, :, ::1] lam, double total_power, double rtol):
    cdef Py_ssize_t L = lam.shape[0]
    cdef Py_ssize_t n = lam.shape[1]
    cdef Py_ssize_t l, i, j
    cdef double denom = 0.0, c, shift
    cdef Py_ssize_t bad = -1
    for l in range(L):
        for i in range(n):
            denom += lam[l, i, i].real
    if not (denom > 0.0 and denom < 1e308):
        return None, -2
    c = total_power / denom
    shift = rtol * total_power
    out = np.empty((L, n, n), dtype=np.complex128)
    cdef cplx[:, :, ::1] o = out
    cdef cplx[::1] work = np.empty(n * n, dtype=np.complex128)
    cdef cplx z
    with nogil:
        for l in range(L):
            for i in range(n):
                o[l, i, i] = c * lam[l, i, i].real
                for j in range(i):
                    z = 0.5 * c * (lam[l, i, j] + lam[l, j, i].conjugate())
                    o[l, i, j] = z
                    o[l, j, i] = z.conjugate()
            if bad < 0:
                for i in range(n * n):
                    work[i] = o[l, i // n, i % n]
                for i in range(n):
                    work[i * n + i] = work[i * n + i] + shift
                if _chol(&work[0], n) < 0:
                    bad = l
    return out, bad
