"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays; the helpers here validate them at the
boundary (finite, square, Hermitian) and wrap the LAPACK eigen/SVD calls
with the tolerance conventions the rest of the package relies on:
all tolerances are relative to ``max(1, norm)`` so that ``H = 0`` works.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-12


class NotHermitianError(ValueError):
    """Matrix failed the Hermiticity check; ``deviation`` is ‖H − H†‖_max."""

    def __init__(self, deviation: float, tol: float):
        self.deviation = float(deviation)
        self.tol = float(tol)
        super().__init__(
            f"matrix is not Hermitian: max|H - H^dagger| = {deviation:.3e} "
            f"exceeds {tol:.3e}"
        )


class EigensolverError(RuntimeError):
    pass


class EigenSystem(NamedTuple):
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


class RankResult(NamedTuple):
    rank: int
    null_basis: np.ndarray  # columns span the kernel
    singular_values: np.ndarray


def max_norm(a) -> float:
    """Entrywise max modulus; 0 for empty arrays."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite complex 2-D array, raising ``ValueError`` otherwise."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def hermitian_deviation(h: np.ndarray) -> float:
    return max_norm(h - h.conj().T)


def as_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``a`` as a Hermitian matrix.

    The check is ``‖H − H†‖_max <= tol * max(1, ‖H‖_max)``; on success the
    returned copy is exactly Hermitian (symmetrized).
    """
    h = as_matrix(a, square=True)
    bound = tol * max(1.0, max_norm(h))
    dev = hermitian_deviation(h)
    if dev > bound:
        raise NotHermitianError(dev, bound)
    return 0.5 * (h + h.conj().T)


def eigh(h) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Eigenvector phases and the ordering inside degenerate groups are whatever
    LAPACK returns; callers must not depend on them.
    """
    h = as_hermitian(h)
    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        try:
            cond = float(np.linalg.cond(h))
        except np.linalg.LinAlgError:
            cond = float("nan")
        raise EigensolverError(
            f"eigensolver did not converge (dim={h.shape[0]}, cond={cond:.3e})"
        ) from exc
    return EigenSystem(values, vectors)


def svd_rank(m, tol: float = 1e-10) -> RankResult:
    """Numerical rank and orthonormal kernel basis from the SVD.

    Singular values above ``tol * sigma_max`` count toward the rank; the zero
    matrix has rank 0 and its kernel is the whole space.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = as_matrix(m)
    n = m.shape[1]
    if not np.any(m.imag):
        m = m.real
    _, s, vh = np.linalg.svd(m)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > tol * smax)) if smax > 0 else 0
    null = vh[rank:].conj().T
    return RankResult(rank, null.reshape(n, n - rank), s)


def random_unitary(dim: int, seed: int | None = None) -> np.ndarray:
    """Approximately Haar-distributed unitary, deterministic per ``(dim, seed)``.

    QR of a complex Ginibre draw with the R-diagonal phases folded back in.
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, seed: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + a.conj().T)


def planted_hermitian(spectrum, seed: int | None = None) -> np.ndarray:
    """``U diag(spectrum) U†`` for a seeded random unitary ``U``."""
    spectrum = np.asarray(spectrum, dtype=float)
    u = random_unitary(spectrum.size, seed)
    h = (u * spectrum) @ u.conj().T
    return 0.5 * (h + h.conj().T)
