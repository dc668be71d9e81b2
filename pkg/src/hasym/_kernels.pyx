# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for gap fields, grid minima and eigenvalue clustering.

Every function here has a numpy twin in ``_pykernels`` that must return
identical results; ``hasym.kernels`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, isfinite, INFINITY

cnp.import_array()


def min_adjacent_gaps(const double[:, ::1] values):
    """Smallest gap between consecutive sorted eigenvalues, row by row.

    Returns ``(gaps, index)`` where ``index[r]`` is the lower level of the
    closing pair (first one on ties). Rows with fewer than two levels get
    ``inf`` and ``-1``.
    """
    cdef Py_ssize_t n = values.shape[0], d = values.shape[1]
    cdef Py_ssize_t r, i, best_i
    cdef double g, best
    gaps = np.empty(n, dtype=np.float64)
    index = np.empty(n, dtype=np.int64)
    cdef double[::1] gv = gaps
    cdef long long[::1] iv = index
    for r in range(n):
        best = INFINITY
        best_i = -1
        for i in range(d - 1):
            g = values[r, i + 1] - values[r, i]
            if g < best:
                best = g
                best_i = i
        gv[r] = best
        iv[r] = best_i
    return gaps, index


def pauli_gaps(const double[::1] hx, const double[::1] hy, const double[::1] hz):
    """Two-level splitting ``2*sqrt(hx**2 + hy**2 + hz**2)`` elementwise."""
    cdef Py_ssize_t n = hx.shape[0], i
    if hy.shape[0] != n or hz.shape[0] != n:
        raise ValueError("hx, hy, hz must have equal length")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    for i in range(n):
        ov[i] = 2.0 * sqrt(hx[i] * hx[i] + hy[i] * hy[i] + hz[i] * hz[i])
    return out


def cluster_sorted(const double[::1] values, double threshold):
    """Single-linkage labels for ascending ``values``.

    A new cluster starts wherever the consecutive gap exceeds ``threshold``.
    """
    cdef Py_ssize_t n = values.shape[0], i
    labels = np.zeros(n, dtype=np.int64)
    cdef long long[::1] lv = labels
    cdef long long cur = 0
    for i in range(1, n):
        if values[i] - values[i - 1] > threshold:
            cur += 1
        lv[i] = cur
    return labels


def local_minima(field, double threshold):
    """Flat C-order indices of grid nodes that are local minima.

    A node qualifies when it is finite, at most ``threshold``, and no larger
    than any finite node in its full (3**ndim - 1) neighbourhood. Works for
    1-, 2- and 3-dimensional fields; out-of-grid neighbours are ignored.
    """
    arr = np.ascontiguousarray(field, dtype=np.float64)
    if arr.ndim < 1 or arr.ndim > 3:
        raise ValueError("local_minima supports 1 to 3 dimensions")
    shape = list(arr.shape) + [1] * (3 - arr.ndim)
    cdef double[:, :, ::1] f = arr.reshape(shape)
    cdef Py_ssize_t n0 = shape[0], n1 = shape[1], n2 = shape[2]
    cdef Py_ssize_t i, j, k, di, dj, dk, a, b, c
    cdef double v, w
    cdef bint ok
    found = []
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                v = f[i, j, k]
                if not isfinite(v) or v > threshold:
                    continue
                ok = True
                for di in range(-1, 2):
                    a = i + di
                    if a < 0 or a >= n0:
                        continue
                    for dj in range(-1, 2):
                        b = j + dj
                        if b < 0 or b >= n1:
                            continue
                        for dk in range(-1, 2):
                            c = k + dk
                            if c < 0 or c >= n2:
                                continue
                            w = f[a, b, c]
                            if isfinite(w) and w < v:
                                ok = False
                                break
                        if not ok:
                            break
                    if not ok:
                        break
                if ok:
                    found.append((i * n1 + j) * n2 + k)
    return np.asarray(found, dtype=np.int64)
