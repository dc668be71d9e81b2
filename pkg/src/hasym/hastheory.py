"""Hidden antiunitary symmetry (HAS) behind degenerate eigenspaces.

An antiunitary operator is stored as its unitary part ``M`` and acts as
``v -> M @ conj(v)``. Composition with complex conjugation gives the algebra
used below:

* ``Υ² = M @ conj(M)``
* ``Υ H = H Υ``  is the matrix identity ``M @ conj(H) == H @ M``

From an orthonormal degenerate pair ``(ψ1, ψ2)`` the operator
``M = ψ2 ψ1ᵀ − ψ1 ψ2ᵀ`` maps ψ1 → ψ2, ψ2 → −ψ1, squares to minus the
projector onto ``span{ψ1, ψ2}`` and commutes with ``H``. It vanishes on the
orthogonal complement, so in general it is a *partial* operator; a *full*
operator (``M`` unitary, ``Υ² = −I``) is the Kramers situation in which every
level is paired.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .numkernel import as_hermitian, as_matrix, eigh, max_norm, random_unitary

ORTHONORMAL_TOL = 1e-10
OPERATOR_TOL = 1e-10

J2 = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=np.complex128)


class NotOrthonormalError(ValueError):
    def __init__(self, deviation: float, tol: float):
        self.deviation = float(deviation)
        super().__init__(
            f"vectors are not orthonormal: deviation {deviation:.3e} exceeds {tol:.3e}"
        )


class SymmetryPreconditionError(ValueError):
    """The supplied operator is not a full antiunitary symmetry squaring to -1."""

    def __init__(self, message: str, square_residual: float, commutator_residual: float):
        self.square_residual = float(square_residual)
        self.commutator_residual = float(commutator_residual)
        super().__init__(
            f"{message} (square_residual={square_residual:.3e}, "
            f"commutator_residual={commutator_residual:.3e})"
        )


@dataclass(frozen=True, eq=False)
class AntiunitaryOperator:
    """Antiunitary map ``v -> unitary_part @ conj(v)``.

    With ``support=None`` the operator is FULL and ``unitary_part`` must be
    unitary. Otherwise ``support`` holds orthonormal columns spanning the
    subspace the operator lives on and ``unitary_part`` must be an isometry
    there and zero elsewhere.
    """

    unitary_part: np.ndarray
    support: np.ndarray | None = None
    tol: float = field(default=OPERATOR_TOL, repr=False)

    def __post_init__(self):
        m = as_matrix(self.unitary_part, square=True)
        object.__setattr__(self, "unitary_part", m)
        if self.support is not None:
            s = np.array(self.support, dtype=np.complex128).reshape(m.shape[0], -1)
            object.__setattr__(self, "support", s)
        dev = self.isometry_deviation()
        if dev > self.tol:
            kind = "unitary" if self.full else "an isometry on its support"
            raise ValueError(f"unitary part is not {kind}: deviation {dev:.3e}")

    @property
    def full(self) -> bool:
        return self.support is None

    @property
    def dim(self) -> int:
        return self.unitary_part.shape[0]

    @property
    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the support (identity when full)."""
        if self.support is None:
            return np.eye(self.dim, dtype=np.complex128)
        return self.support @ self.support.conj().T

    def isometry_deviation(self) -> float:
        # Υ†Υ = K M†M K, so M†M must equal conj(P) for Υ†Υ = P.
        m = self.unitary_part
        return max_norm(m.conj().T @ m - self.projector.conj())

    def __call__(self, v):
        return apply(self, v)


class DegenerateSubspace(NamedTuple):
    energy: float
    basis: np.ndarray  # orthonormal columns
    residual: float  # max ‖Hψ − Eψ‖ over the basis

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


class HasReport(NamedTuple):
    square_residual: float
    commutator_residual: float

    def passes(self, tol: float) -> bool:
        return self.square_residual <= tol and self.commutator_residual <= tol


class CertifiedPair(NamedTuple):
    index: int
    energy: float
    psi1: np.ndarray
    psi2: np.ndarray
    overlap: float  # |<ψ1|Υψ1>|
    residual: float  # ‖Hψ2 − Eψ2‖
    certified: bool


def detect_degenerate_subspaces(h, rel_tol: float = 1e-8) -> list[DegenerateSubspace]:
    """Group the spectrum of ``h`` into (near-)degenerate clusters.

    Sorted eigenvalues are joined by single linkage: consecutive values within
    ``rel_tol * max(1, ‖H‖_max)`` share a cluster. Only clusters of two or more
    levels are returned, each with its mean energy and an orthonormal basis.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    h = as_hermitian(h)
    values, vectors = eigh(h)
    threshold = rel_tol * max(1.0, max_norm(h))
    labels = kernels.cluster_sorted(values, threshold)
    out = []
    for lab in range(int(labels[-1]) + 1 if labels.size else 0):
        idx = np.flatnonzero(labels == lab)
        if idx.size < 2:
            continue
        energy = float(values[idx].mean())
        basis, _ = np.linalg.qr(vectors[:, idx])
        residual = float(np.max(np.linalg.norm(h @ basis - energy * basis, axis=0)))
        out.append(DegenerateSubspace(energy, basis, residual))
    return out


def _orthonormality_deviation(psi1, psi2) -> float:
    return max(
        abs(np.vdot(psi1, psi1).real - 1.0),
        abs(np.vdot(psi2, psi2).real - 1.0),
        abs(np.vdot(psi1, psi2)),
    )


def construct_pair_operator(psi1, psi2, tol: float = ORTHONORMAL_TOL) -> AntiunitaryOperator:
    """The partial HAS operator ``M = ψ2 ψ1ᵀ − ψ1 ψ2ᵀ`` for an orthonormal pair.

    The outer products use plain transposes: acting as ``v -> M conj(v)`` the
    bra ``⟨ψ1*|`` becomes ``ψ1ᵀ`` and the operator sends ψ1 to ψ2, ψ2 to −ψ1.
    """
    psi1 = np.asarray(psi1, dtype=np.complex128).ravel()
    psi2 = np.asarray(psi2, dtype=np.complex128).ravel()
    if psi1.shape != psi2.shape:
        raise ValueError(f"vector sizes differ: {psi1.size} vs {psi2.size}")
    dev = _orthonormality_deviation(psi1, psi2)
    if dev > tol:
        raise NotOrthonormalError(dev, tol)
    m = np.outer(psi2, psi1) - np.outer(psi1, psi2)
    return AntiunitaryOperator(m, support=np.column_stack([psi1, psi2]))


def apply(op: AntiunitaryOperator, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.shape[0] != op.dim:
        raise ValueError(f"dimension mismatch: operator {op.dim}, vector {v.shape[0]}")
    return op.unitary_part @ v.conj()


def verify_has(op: AntiunitaryOperator, h) -> HasReport:
    """Residuals of ``Υ² = −P`` and ``[Υ, H] = 0`` in max norm.

    The commutator residual is normalized by ``max(1, ‖H‖_max)``.
    """
    h = as_matrix(h, square=True)
    if h.shape[0] != op.dim:
        raise ValueError(f"dimension mismatch: operator {op.dim}, H {h.shape[0]}")
    m = op.unitary_part
    square = max_norm(m @ m.conj() + op.projector)
    comm = max_norm(m @ h.conj() - h @ m) / max(1.0, max_norm(h))
    return HasReport(square, comm)


def certify_from_symmetry(op: AntiunitaryOperator, h, tol: float = 1e-8) -> list[CertifiedPair]:
    """Kramers pairing of every eigenvector of ``h`` under a full symmetry ``op``.

    For each eigenvector ψ1 (energy E) the partner ψ2 = Υψ1 must be orthogonal
    to ψ1 and satisfy ``‖Hψ2 − Eψ2‖ <= tol * max(1, ‖H‖_max)``. Raises
    ``SymmetryPreconditionError`` unless ``op`` is full with both HAS
    residuals at most ``tol``.
    """
    h = as_hermitian(h)
    report = verify_has(op, h)
    if not op.full:
        raise SymmetryPreconditionError("operator is partial, not full", *report)
    if not report.passes(tol):
        raise SymmetryPreconditionError("operator is not a symmetry squaring to -1", *report)
    values, vectors = eigh(h)
    scale = max(1.0, max_norm(h))
    pairs = []
    for i, energy in enumerate(values):
        psi1 = vectors[:, i]
        psi2 = apply(op, psi1)
        overlap = float(abs(np.vdot(psi1, psi2)))
        residual = float(np.linalg.norm(h @ psi2 - energy * psi2))
        ok = overlap <= tol and residual <= tol * scale
        pairs.append(CertifiedPair(i, float(energy), psi1, psi2, overlap, residual, ok))
    return pairs


def construct_nfold_operators(subspace: DegenerateSubspace) -> list[AntiunitaryOperator]:
    """``n − 1`` partial operators pairing ψ1 with each ψ_{j+1} of an n-fold subspace."""
    basis = subspace.basis
    n = basis.shape[1]
    if n < 2:
        raise ValueError(f"subspace dimension must be at least 2, got {n}")
    return [construct_pair_operator(basis[:, 0], basis[:, j]) for j in range(1, n)]


def kramers_operator(dim: int, seed: int | None = None) -> AntiunitaryOperator:
    """Random full antiunitary ``M = U J Uᵀ`` with ``Υ² = −I`` (``dim`` even)."""
    if dim < 2 or dim % 2:
        raise ValueError("a full operator with square -1 needs an even dimension")
    u = random_unitary(dim, seed)
    j = np.kron(np.eye(dim // 2), J2)
    return AntiunitaryOperator(u @ j @ u.T)


def symmetrize(h, op: AntiunitaryOperator) -> np.ndarray:
    """Average ``h`` with its image ``M conj(H) M†`` under a full operator."""
    h = as_hermitian(h)
    m = op.unitary_part
    out = 0.5 * (h + m @ h.conj() @ m.conj().T)
    return 0.5 * (out + out.conj().T)
