"""When a two-dimensional unitary irrep forces a two-level degeneracy.

Every 2x2 unitary is, up to a global phase, a special unitary
``[[a1 + i·a2, a3 + i·a4], [−a3 + i·a4, a1 − i·a2]]`` with ``Σ a_i² = 1``.
For a pair ``A, B`` of such matrices commuting with
``H = h0·I + hx·σx + hy·σy + hz·σz`` the vanishing of ``[A, H]`` and
``[B, H]`` gives six linear equations in ``(hx, hy, hz)``. They force
``h = 0`` exactly when the system has rank 3, which happens exactly when
``[A, B] ≠ 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numkernel import as_matrix, max_norm, svd_rank
from .twolevel import SIGMA_X, SIGMA_Y, SIGMA_Z

UNITARY_TOL = 1e-10
NORM_TOL = 1e-12
RANK_TOL = 1e-10
FAITHFUL_TOL = 1e-12
LAMBDA_TOL = 1e-10


class NotUnitaryError(ValueError):
    def __init__(self, name: str, deviation: float, tol: float):
        self.deviation = float(deviation)
        super().__init__(
            f"matrix {name} is not unitary: max|U^dagger U - I| = {deviation:.3e} "
            f"exceeds {tol:.3e}"
        )


def su2_matrix(q) -> np.ndarray:
    q1, q2, q3, q4 = (float(x) for x in q)
    return np.array(
        [[q1 + 1j * q2, q3 + 1j * q4], [-q3 + 1j * q4, q1 - 1j * q2]], dtype=np.complex128
    )


@dataclass(frozen=True, eq=False)
class IrrepPair:
    """Real parameters ``a = (a1..a4)`` and ``b = (b1..b4)`` of two SU(2) matrices."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name in ("a", "b"):
            q = np.array(getattr(self, name), dtype=float).reshape(4)
            if not np.all(np.isfinite(q)):
                raise ValueError(f"{name} has non-finite entries")
            dev = abs(float(q @ q) - 1.0)
            if dev > NORM_TOL:
                raise ValueError(f"{name} is not unit-norm: |sum - 1| = {dev:.3e}")
            object.__setattr__(self, name, q)

    @property
    def A(self) -> np.ndarray:
        return su2_matrix(self.a)

    @property
    def B(self) -> np.ndarray:
        return su2_matrix(self.b)


class LambdaVector(NamedTuple):
    l1: float
    l2: float
    l3: float

    def norm_inf(self) -> float:
        return float(max(abs(self.l1), abs(self.l2), abs(self.l3)))


class ConstraintSystem(NamedTuple):
    matrix: np.ndarray  # 6x3 acting on (hx, hy, hz); rows 0-2 from A, 3-5 from B
    rank: int
    null_basis: np.ndarray  # columns


class Decision(NamedTuple):
    forced: bool
    lam: LambdaVector
    rank: int
    consistent: bool  # ‖λ‖ > LAMBDA_TOL implies rank 3


def _su2_params(u: np.ndarray) -> np.ndarray:
    s = np.sqrt(np.linalg.det(u))
    v = u / s
    q = np.array([v[0, 0].real, v[0, 0].imag, v[0, 1].real, v[0, 1].imag])
    # ±v are both special unitary; take the first non-negligible component positive
    for x in q:
        if abs(x) > NORM_TOL:
            if x < 0:
                q = -q
            break
    return q / np.linalg.norm(q)


def from_unitary(a, b) -> IrrepPair:
    """Strip global phases from two 2x2 unitaries and read off ``(a, b)``.

    Each matrix is divided by a square root of its determinant; the sign of
    that root is fixed so the first of ``(q1, q2, q3, q4)`` that is nonzero
    comes out positive.
    """
    params = []
    for name, u in (("A", a), ("B", b)):
        u = as_matrix(u)
        if u.shape != (2, 2):
            raise ValueError(f"matrix {name} must be 2x2, got {u.shape}")
        dev = max_norm(u.conj().T @ u - np.eye(2))
        if dev > UNITARY_TOL:
            raise NotUnitaryError(name, dev, UNITARY_TOL)
        params.append(_su2_params(u))
    return IrrepPair(*params)


def lambda_vector(pair: IrrepPair) -> LambdaVector:
    """Commutator invariants with ``[A, B] = 2[[iλ1, −λ2 + iλ3], [λ2 + iλ3, −iλ1]]``."""
    _, a2, a3, a4 = pair.a
    _, b2, b3, b4 = pair.b
    lam = LambdaVector(float(a3 * b4 - a4 * b3), float(a2 * b4 - a4 * b2), float(a2 * b3 - a3 * b2))
    l1, l2, l3 = lam
    block = 2 * np.array([[1j * l1, -l2 + 1j * l3], [l2 + 1j * l3, -1j * l1]])
    A, B = pair.A, pair.B
    dev = max_norm(A @ B - B @ A - block)
    if dev > FAITHFUL_TOL:
        raise ArithmeticError(f"commutator block mismatch {dev:.3e}")
    return lam


def _rows(q) -> np.ndarray:
    _, q2, q3, q4 = q
    return np.array([[q3, -q4, 0.0], [0.0, q2, -q3], [q2, 0.0, -q4]])


def commutator_rows(u) -> np.ndarray:
    """Constraint coefficients read directly off ``C_j = [U, σ_j] / 2``.

    Column ``j`` (x, y, z) is ``(Re C_j[0,0], Re C_j[0,1], Im C_j[0,1])``; the
    other entries of ``C_j`` are fixed because ``C_j`` is traceless and Hermitian.
    """
    out = np.empty((3, 3))
    for j, s in enumerate((SIGMA_X, SIGMA_Y, SIGMA_Z)):
        c = (u @ s - s @ u) / 2
        out[:, j] = (c[0, 0].real, c[0, 1].real, c[0, 1].imag)
    return out


def constraint_system(pair: IrrepPair) -> ConstraintSystem:
    """The six linear conditions on ``(hx, hy, hz)`` from ``[A, H] = [B, H] = 0``.

    Rows are cross-checked against the numerically computed commutators.
    """
    mat = np.vstack([_rows(pair.a), _rows(pair.b)])
    measured = np.vstack([commutator_rows(pair.A), commutator_rows(pair.B)])
    dev = float(np.max(np.abs(mat - measured)))
    if dev > FAITHFUL_TOL:
        raise ArithmeticError(f"constraint rows disagree with commutators by {dev:.3e}")
    rank, null, _ = svd_rank(mat, RANK_TOL)
    return ConstraintSystem(mat, rank, np.real(null))


def forces_degeneracy(pair: IrrepPair) -> Decision:
    lam = lambda_vector(pair)
    system = constraint_system(pair)
    forced = system.rank == 3
    consistent = bool(forced or lam.norm_inf() <= LAMBDA_TOL)
    return Decision(forced, lam, system.rank, consistent)
