"""Numpy implementations of the kernels in ``_kernels.pyx``.

Used when the compiled extension is missing or ``HASYM_FORCE_PYTHON`` is set.
Results are bit-identical to the compiled versions.
"""
from itertools import product

import numpy as np


def min_adjacent_gaps(values):
    values = np.ascontiguousarray(values, dtype=np.float64)
    n, d = values.shape
    if d < 2:
        return np.full(n, np.inf), np.full(n, -1, dtype=np.int64)
    diffs = values[:, 1:] - values[:, :-1]
    index = np.argmin(diffs, axis=1).astype(np.int64)
    gaps = diffs[np.arange(n), index]
    return gaps, index


def pauli_gaps(hx, hy, hz):
    hx, hy, hz = (np.ascontiguousarray(h, dtype=np.float64) for h in (hx, hy, hz))
    if not (hx.shape == hy.shape == hz.shape):
        raise ValueError("hx, hy, hz must have equal length")
    return 2.0 * np.sqrt(hx * hx + hy * hy + hz * hz)


def cluster_sorted(values, threshold):
    values = np.ascontiguousarray(values, dtype=np.float64)
    labels = np.zeros(values.shape[0], dtype=np.int64)
    if values.shape[0] > 1:
        labels[1:] = np.cumsum(np.diff(values) > threshold)
    return labels


def local_minima(field, threshold):
    f = np.asarray(field, dtype=np.float64)
    if f.ndim < 1 or f.ndim > 3:
        raise ValueError("local_minima supports 1 to 3 dimensions")
    # non-finite neighbours never block a minimum
    masked = np.pad(np.where(np.isfinite(f), f, np.inf), 1, constant_values=np.inf)
    ok = np.isfinite(f) & (f <= threshold)
    for shift in product((-1, 0, 1), repeat=f.ndim):
        if not any(shift):
            continue
        view = tuple(slice(1 + s, 1 + s + n) for s, n in zip(shift, f.shape))
        ok &= ~(masked[view] < f)
    return np.flatnonzero(ok).astype(np.int64)
