"""Pure-Python/NumPy fallback for the dense symmetric eigensolver.

Same algorithmic pipeline as the compiled kernel (Householder reduction, then
implicit-shift QL with eigenvector accumulation), with the O(n^2) inner loops
vectorised through NumPy. Results agree with the compiled kernel to rounding
error, not bit for bit.
"""

import math

import numpy as np

EPS = np.finfo(np.float64).eps


def _householder(a):
    """Reduce symmetric ``a`` to tridiagonal form, ``a = Q T Q^T``.

    Returns the diagonal, the sub-diagonal (``e[i]`` couples rows ``i-1`` and
    ``i``; ``e[0] = 0``) and ``Q``.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    q = np.eye(n)
    e = np.zeros(n)
    for k in range(n - 2):
        x = a[k + 1:, k].copy()
        norm = math.sqrt(float(x @ x))
        if norm == 0.0:
            continue
        alpha = -norm if x[0] > 0 else norm
        v = x
        v[0] -= alpha
        vnorm = math.sqrt(float(v @ v))
        if vnorm == 0.0:
            continue
        v /= vnorm
        sub = a[k + 1:, k + 1:]
        p = sub @ v
        kk = float(v @ p)
        w = p - kk * v
        sub -= 2.0 * (np.outer(v, w) + np.outer(w, v))
        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        a[k + 1, k] = alpha
        a[k, k + 1] = alpha
        qs = q[:, k + 1:]
        qs -= 2.0 * np.outer(qs @ v, v)
    d = np.diagonal(a).copy()
    e[1:] = np.diagonal(a, -1)
    return d, e, q


def eigh(a, max_sweeps=60):
    """Eigen-decompose a dense real symmetric matrix.

    Returns ``(w, V, status, residual)`` exactly like the compiled kernel.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0)), 0, 0.0
    d, e, v = _householder(a)

    e[:-1] = e[1:]
    e[-1] = 0.0
    f = 0.0
    tst1 = 0.0
    hypot = math.hypot
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n and abs(e[m]) > EPS * tst1:
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_sweeps:
                    return d, v, -1, float(abs(e[l]))
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2:] -= h
                f += h

                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
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
                    col_i = v[:, i].copy()
                    col_j = v[:, i + 1]
                    v[:, i] = c * col_i - s * col_j
                    v[:, i + 1] = s * col_i + c * col_j
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if not abs(e[l]) > EPS * tst1:
                    break
        d[l] += f
        e[l] = 0.0

    order = np.argsort(d, kind="stable")
    return d[order].copy(), np.ascontiguousarray(v[:, order]), 0, 0.0
