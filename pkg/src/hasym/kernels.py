"""Kernel backend selection.

The compiled Cython extension is preferred; set ``HASYM_FORCE_PYTHON=1`` to
use the numpy fallback. ``BACKEND`` names the active choice.
"""
import os

from . import _pykernels

if os.environ.get("HASYM_FORCE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

min_adjacent_gaps = _impl.min_adjacent_gaps
pauli_gaps = _impl.pauli_gaps
cluster_sorted = _impl.cluster_sorted
local_minima = _impl.local_minima

__all__ = [
    "BACKEND",
    "min_adjacent_gaps",
    "pauli_gaps",
    "cluster_sorted",
    "local_minima",
]
