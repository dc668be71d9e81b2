"""Two-level Hamiltonians in the Pauli basis.

Conventions are fixed here once::

    σx = [[0, 1], [1, 0]]   σy = [[0, -i], [i, 0]]   σz = [[1, 0], [0, -1]]

so that ``h0·I + hx·σx + hy·σy + hz·σz = [[h0+hz, hx−i·hy], [hx+i·hy, h0−hz]]``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .hastheory import J2
from .numkernel import as_hermitian, max_norm

IDENTITY = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI_BASIS = (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)

# Υ = J2·K; its inverse unitary part is J2† = −J2.
CANONICAL_UPSILON = J2


class PauliVector(NamedTuple):
    h0: float
    hx: float
    hy: float
    hz: float

    def matrix(self) -> np.ndarray:
        h0, hx, hy, hz = self
        return np.array(
            [[h0 + hz, hx - 1j * hy], [hx + 1j * hy, h0 - hz]], dtype=np.complex128
        )

    @property
    def field(self) -> np.ndarray:
        return np.array([self.hx, self.hy, self.hz])


class UpsilonCheck(NamedTuple):
    transformed: np.ndarray
    residual: float


def _as_two_level(h) -> np.ndarray:
    h = as_hermitian(h)
    if h.shape != (2, 2):
        raise ValueError(f"expected a 2x2 Hamiltonian, got {h.shape}")
    return h


def pauli_decompose(h) -> PauliVector:
    h = _as_two_level(h)
    return PauliVector(
        float((h[0, 0].real + h[1, 1].real) / 2),
        float(h[1, 0].real),
        float(h[1, 0].imag),
        float((h[0, 0].real - h[1, 1].real) / 2),
    )


def energies(pv: PauliVector) -> tuple[float, float]:
    """``(E−, E+) = h0 ∓ |h|``."""
    r = float(np.sqrt(pv.hx**2 + pv.hy**2 + pv.hz**2))
    return pv.h0 - r, pv.h0 + r


def gap(pv: PauliVector) -> float:
    """Level splitting ``E+ − E− = 2|h|``; independent of ``h0``."""
    return 2.0 * float(np.sqrt(pv.hx**2 + pv.hy**2 + pv.hz**2))


def constraint_residual(pv: PauliVector) -> np.ndarray:
    """``(hx, hy, hz)``: the two levels coincide exactly when this vanishes."""
    return pv.field


def canonical_upsilon_check(h) -> UpsilonCheck:
    """Transform ``h`` by ``Υ = [[0, −1], [1, 0]]·K`` and measure invariance.

    ``ΥHΥ⁻¹ = M conj(H) M†`` flips the sign of ``(hx, hy, hz)`` and keeps
    ``h0``, so the residual is ``2·max(|hz|, |hx − i·hy|)``.
    """
    h = _as_two_level(h)
    m = CANONICAL_UPSILON
    transformed = m @ h.conj() @ m.conj().T
    return UpsilonCheck(transformed, max_norm(transformed - h))
