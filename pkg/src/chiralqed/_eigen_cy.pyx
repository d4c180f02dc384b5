# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense symmetric eigensolver.

Householder reduction to tridiagonal form (tred2) followed by the implicit
shift QL iteration with eigenvector accumulation (tql2). Loop order follows
the EISPACK routines so the result is deterministic for identical input.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot

cnp.import_array()

cdef double EPS = 2.220446049250313e-16


cdef void _tred2(double[:, ::1] V, double[::1] d, double[::1] e, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double scale, f, g, h, hh

    for j in range(n):
        d[j] = V[n - 1, j]

    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale = scale + fabs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
                V[j, i] = 0.0
        else:
            for k in range(i):
                d[k] = d[k] / scale
                h = h + d[k] * d[k]
            f = d[i - 1]
            g = sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                for k in range(j + 1, i):
                    g = g + V[k, j] * d[k]
                    e[k] = e[k] + V[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] = e[j] / h
                f = f + e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] = e[j] - hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    V[k, j] = V[k, j] - (f * e[k] + g * d[k])
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h

    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = V[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g = g + V[k, i + 1] * V[k, j]
                for k in range(i + 1):
                    V[k, j] = V[k, j] - g * d[k]
        for k in range(i + 1):
            V[k, i + 1] = 0.0
    for j in range(n):
        d[j] = V[n - 1, j]
        V[n - 1, j] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0


cdef int _tql2(double[:, ::1] V, double[::1] d, double[::1] e, Py_ssize_t n,
               int max_sweeps, double* residual) noexcept nogil:
    cdef Py_ssize_t i, j, k, l, m
    cdef int it
    cdef double f, tst1, g, p, r, dl1, h, c, c2, c3, el1, s, s2

    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0

    f = 0.0
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, fabs(d[l]) + fabs(e[l]))
        m = l
        while m < n:
            if fabs(e[m]) <= EPS * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_sweeps:
                    residual[0] = fabs(e[l])
                    return -1
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] = d[i] - h
                f = f + h

                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = V[k, i + 1]
                        V[k, i + 1] = s * V[k, i] + c * h
                        V[k, i] = c * V[k, i] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if not (fabs(e[l]) > EPS * tst1):
                    break
        d[l] = d[l] + f
        e[l] = 0.0

    # selection sort, ascending
    for i in range(n - 1):
        k = i
        p = d[i]
        for j in range(i + 1, n):
            if d[j] < p:
                k = j
                p = d[j]
        if k != i:
            d[k] = d[i]
            d[i] = p
            for j in range(n):
                p = V[j, i]
                V[j, i] = V[j, k]
                V[j, k] = p
    residual[0] = 0.0
    return 0


def eigh(a, int max_sweeps=60):
    """Eigen-decompose a dense real symmetric matrix.

    Returns ``(w, V, status, residual)`` with ascending ``w`` and eigenvectors
    in the columns of ``V``. ``status`` is 0 on success and -1 when the QL
    sweep cap was hit.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] arr = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = arr.shape[0]
    cdef double[:, ::1] V = arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] off = np.zeros(n, dtype=np.float64)
    cdef double[::1] d = w
    cdef double[::1] e = off
    cdef double residual = 0.0
    cdef int status = 0
    if n == 0:
        return w, arr, 0, 0.0
    with nogil:
        _tred2(V, d, e, n)
        status = _tql2(V, d, e, n, max_sweeps, &residual)
    return w, arr, status, residual
