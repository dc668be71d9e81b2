"""Locating degeneracy points of parameterized Hamiltonians.

A coarse grid scan of the smallest adjacent level spacing seeds a
derivative-free (Nelder-Mead) minimization of that spacing; each point where
the gap closes is handed to the HAS construction for verification.

The adjacent gap is continuous but has a conical, non-differentiable minimum
at a crossing, which is why a simplex method with restarts is used instead of
gradients.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .hastheory import (
    DegenerateSubspace,
    HasReport,
    construct_nfold_operators,
    construct_pair_operator,
    detect_degenerate_subspaces,
    verify_has,
)
from .numkernel import as_hermitian, eigh
from .twolevel import PauliVector, canonical_upsilon_check, constraint_residual, pauli_decompose

MERGE_DISTANCE = 1e-4
MAX_EVALS = 2000
GAP_FLOOR = 1e-12


class UnknownModelError(KeyError):
    def __init__(self, name: str, known: Sequence[str]):
        self.name = name
        self.known = list(known)
        super().__init__(f"unknown model {name!r}; available: {', '.join(self.known)}")

    def __str__(self):
        return self.args[0]


class RefinementFailed(Exception):
    """Budget exhausted before the gap closed; carries the best point found."""

    def __init__(self, alpha, gap: float, evaluations: int, level_index: int):
        self.alpha = np.asarray(alpha, dtype=float)
        self.gap = float(gap)
        self.evaluations = int(evaluations)
        self.level_index = int(level_index)
        super().__init__(
            f"gap did not close: best gap {gap:.6e} at {self.alpha.tolist()} "
            f"after {evaluations} evaluations"
        )


@dataclass(frozen=True, eq=False)
class ParametricModel:
    """A family ``alpha -> H(alpha)`` of fixed-size Hermitian matrices on a box.

    ``periods`` gives a per-axis period (``None`` for non-periodic axes) used to
    identify equivalent points. ``pauli`` optionally maps an ``(N, p)`` array of
    parameters to the four Pauli components so dim-2 models can be scanned
    without per-node eigensolves.
    """

    name: str
    param_dim: int
    param_box: tuple[tuple[float, float], ...]
    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int
    periods: tuple[float | None, ...] | None = None
    pauli: Callable[[np.ndarray], tuple] | None = None
    description: str = ""

    def __post_init__(self):
        if len(self.param_box) != self.param_dim:
            raise ValueError("param_box must have one interval per parameter")
        for lo, hi in self.param_box:
            if not lo < hi:
                raise ValueError(f"empty parameter interval [{lo}, {hi}]")

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.param_box])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.param_box])

    def hamiltonian(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float).reshape(self.param_dim)
        h = as_hermitian(self.evaluator(alpha))
        if h.shape != (self.dim, self.dim):
            raise ValueError(f"model {self.name} returned shape {h.shape}, expected {self.dim}")
        return h

    def gap_at(self, alpha) -> tuple[float, int]:
        """Smallest adjacent eigenvalue spacing at ``alpha`` and its lower level."""
        values = np.linalg.eigvalsh(self.hamiltonian(alpha))
        gaps, index = kernels.min_adjacent_gaps(values.reshape(1, -1))
        return float(gaps[0]), int(index[0])

    def contains(self, alpha) -> bool:
        alpha = np.asarray(alpha, dtype=float)
        return bool(np.all(alpha >= self.lower) and np.all(alpha <= self.upper))

    def distance(self, x, y) -> float:
        """Euclidean distance after folding periodic axes (minimum image)."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.periods is not None:
            for i, p in enumerate(self.periods):
                if p:
                    d[i] -= p * np.round(d[i] / p)
        return float(np.linalg.norm(d))


def _pauli_matrix(h0, hx, hy, hz) -> np.ndarray:
    return PauliVector(h0, hx, hy, hz).matrix()


def _linear2_pauli(a):
    a = np.atleast_2d(a)
    return np.zeros(len(a)), a[:, 0], a[:, 1], a[:, 2]


def _honeycomb_pauli(s):
    # k = s1 b1 + s2 b2 with a_i . b_j = 2 pi delta_ij, so k . a_i = 2 pi s_i
    s = np.atleast_2d(s)
    f = 1.0 + np.exp(2j * np.pi * s[:, 0]) + np.exp(2j * np.pi * s[:, 1])
    return np.zeros(len(s)), f.real, f.imag, np.zeros(len(s))


def _piflux_pauli(k):
    k = np.atleast_2d(k)
    return np.zeros(len(k)), 2 * np.cos(k[:, 0]), 2 * np.cos(k[:, 1]), np.zeros(len(k))


def _from_pauli(pauli):
    def evaluator(alpha):
        h0, hx, hy, hz = (float(c[0]) for c in pauli(alpha))
        return _pauli_matrix(h0, hx, hy, hz)

    return evaluator


HONEYCOMB_A1 = np.array([1.5, math.sqrt(3) / 2])
HONEYCOMB_A2 = np.array([1.5, -math.sqrt(3) / 2])
HONEYCOMB_RECIPROCAL = 2 * np.pi * np.linalg.inv(np.vstack([HONEYCOMB_A1, HONEYCOMB_A2])).T


def honeycomb_k(s) -> np.ndarray:
    """Cartesian momentum for fractional reciprocal coordinates ``s``."""
    return np.asarray(s, dtype=float) @ HONEYCOMB_RECIPROCAL


def builtin_models() -> list[ParametricModel]:
    """The three built-in fixture families.

    ``linear2``
        ``H = a1 σx + a2 σy + a3 σz`` on ``[-2, 2]^3``; gap ``2|a|``.
    ``honeycomb``
        Nearest-neighbour graphene ``Re f σx + Im f σy`` with
        ``f = 1 + exp(i k·a1) + exp(i k·a2)``. Parameters are fractional
        coordinates ``(s1, s2)`` of ``k = s1 b1 + s2 b2`` on the unit box,
        i.e. one primitive reciprocal cell, periodic with period 1.
    ``piflux``
        ``2 cos(k1) σx + 2 cos(k2) σy`` on ``[-π, π]^2``, periodic in ``2π``.
    """
    return [
        ParametricModel(
            "linear2", 3, ((-2.0, 2.0),) * 3, _from_pauli(_linear2_pauli), 2,
            periods=(None, None, None), pauli=_linear2_pauli,
            description="a1*sx + a2*sy + a3*sz",
        ),
        ParametricModel(
            "honeycomb", 2, ((0.0, 1.0),) * 2, _from_pauli(_honeycomb_pauli), 2,
            periods=(1.0, 1.0), pauli=_honeycomb_pauli,
            description="graphene Bloch Hamiltonian in fractional reciprocal coordinates",
        ),
        ParametricModel(
            "piflux", 2, ((-math.pi, math.pi),) * 2, _from_pauli(_piflux_pauli), 2,
            periods=(2 * math.pi, 2 * math.pi), pauli=_piflux_pauli,
            description="2cos(k1)*sx + 2cos(k2)*sy",
        ),
    ]


def get_model(name: str) -> ParametricModel:
    models = {m.name: m for m in builtin_models()}
    try:
        return models[name]
    except KeyError:
        raise UnknownModelError(name, sorted(models)) from None


def freeze(model: ParametricModel, fixed: dict[int, float]) -> ParametricModel:
    """Restrict ``model`` by pinning the parameters indexed in ``fixed``."""
    free = [i for i in range(model.param_dim) if i not in fixed]
    if not free:
        raise ValueError("at least one parameter must stay free")
    for i, v in fixed.items():
        lo, hi = model.param_box[i]
        if not lo <= v <= hi:
            raise ValueError(f"frozen value {v} outside [{lo}, {hi}] for parameter {i}")

    def expand(alpha):
        alpha = np.atleast_2d(alpha)
        full = np.empty((len(alpha), model.param_dim))
        full[:, free] = alpha
        for i, v in fixed.items():
            full[:, i] = v
        return full

    pauli = None
    if model.pauli is not None:
        pauli = lambda a: model.pauli(expand(a))  # noqa: E731
    tag = ",".join(f"a{i + 1}={v!r}" for i, v in sorted(fixed.items()))
    return ParametricModel(
        f"{model.name}[{tag}]",
        len(free),
        tuple(model.param_box[i] for i in free),
        lambda a: model.evaluator(expand(a)[0]),
        model.dim,
        periods=None if model.periods is None else tuple(model.periods[i] for i in free),
        pauli=pauli,
        description=model.description,
    )


class GridMinimum(NamedTuple):
    index: tuple[int, ...]
    alpha: np.ndarray
    gap: float


@dataclass
class GapField:
    """Minimal adjacent gap on a regular grid over the parameter box."""

    model: str
    axes: list[np.ndarray]
    gaps: np.ndarray  # NaN at invalid nodes
    threshold: float
    minima: list[GridMinimum] = field(default_factory=list)
    invalid: list[tuple[tuple[int, ...], str]] = field(default_factory=list)

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.gaps.shape

    def nodes(self) -> np.ndarray:
        """All grid points as rows, in lexicographic index order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"alpha{i + 1}" for i in range(len(self.axes))] + ["gap"])
        for row, g in zip(self.nodes(), self.gaps.ravel()):
            w.writerow([repr(float(x)) for x in row] + [repr(float(g))])
        return buf.getvalue()


def _resolution(model: ParametricModel, resolution) -> tuple[int, ...]:
    if isinstance(resolution, (int, np.integer)):
        resolution = (int(resolution),) * model.param_dim
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) == 1 and model.param_dim > 1:
        resolution = resolution * model.param_dim
    if len(resolution) != model.param_dim:
        raise ValueError(f"need {model.param_dim} resolutions, got {len(resolution)}")
    if any(r < 2 for r in resolution):
        raise ValueError("resolution must be at least 2 per axis")
    return resolution


def grid_scan(model: ParametricModel, resolution, threshold: float | None = None) -> GapField:
    """Evaluate the adjacent gap on a lattice of nodes covering ``param_box``.

    Nodes whose evaluation fails are recorded in ``invalid`` and carry NaN.
    Local minima at or below ``threshold`` (default: a tenth of the largest
    gap on the grid) are returned as refinement seeds, in lexicographic order.
    """
    if model.param_dim > 3:
        raise ValueError("grid scans support at most 3 parameters")
    shape = _resolution(model, resolution)
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(model.param_box, shape)]
    result = GapField(model.name, axes, np.empty(0), 0.0)
    nodes = result.nodes()
    invalid: list[tuple[tuple[int, ...], str]] = []

    if model.pauli is not None:
        _, hx, hy, hz = (np.broadcast_to(np.asarray(c, dtype=float), len(nodes)) for c in model.pauli(nodes))
        gaps = kernels.pauli_gaps(np.ascontiguousarray(hx), np.ascontiguousarray(hy), np.ascontiguousarray(hz))
        for flat in np.flatnonzero(~np.isfinite(gaps)):
            invalid.append((np.unravel_index(flat, shape), "non-finite Hamiltonian"))
        gaps[~np.isfinite(gaps)] = np.nan
    else:
        values = np.full((len(nodes), model.dim), np.nan)
        for flat, alpha in enumerate(nodes):
            try:
                values[flat] = np.linalg.eigvalsh(model.hamiltonian(alpha))
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                invalid.append((np.unravel_index(flat, shape), str(exc)))
        gaps, _ = kernels.min_adjacent_gaps(values)
        gaps[~np.isfinite(gaps)] = np.nan

    invalid = [(tuple(int(i) for i in idx), msg) for idx, msg in invalid]
    field_ = gaps.reshape(shape)
    if threshold is None:
        top = np.nanmax(field_) if np.any(np.isfinite(field_)) else 0.0
        threshold = 0.1 * float(top)
    minima = []
    for flat in kernels.local_minima(field_, threshold):
        idx = tuple(int(i) for i in np.unravel_index(int(flat), shape))
        minima.append(GridMinimum(idx, nodes[flat].copy(), float(gaps[flat])))
    result.gaps = field_
    result.threshold = float(threshold)
    result.minima = minima
    result.invalid = invalid
    return result


@dataclass
class DegeneracyPoint:
    alpha: np.ndarray
    gap_value: float
    level_index: int
    has_report: HasReport | None = None
    evaluations: int = 0

    def recompute_gap(self, model: ParametricModel) -> float:
        values = np.linalg.eigvalsh(model.hamiltonian(self.alpha))
        i = self.level_index
        return float(values[i + 1] - values[i])


def _simplex(x0, scale, lower, upper, rng):
    # random orthonormal directions, reflected inward when they leave the box
    p = len(x0)
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    verts = [x0]
    for d in q.T:
        v = x0 + scale * d
        out = (v < lower) | (v > upper)
        v[out] = x0[out] - scale * d[out]
        verts.append(np.clip(v, lower, upper))
    return np.array(verts)


def refine(
    model: ParametricModel,
    alpha0,
    tol: float = 1e-10,
    seed: int | Sequence[int] = 0,
    max_evals: int = MAX_EVALS,
) -> DegeneracyPoint:
    """Minimize the adjacent gap from ``alpha0`` with restarted Nelder-Mead.

    The search keeps polishing toward a gap of 1e-12 while budget remains,
    and succeeds if the final gap is at most ``max(tol, 1e-12)``; the HAS
    report of the operator built from the two closing eigenvectors is
    attached. Raises
    ``RefinementFailed`` with the best point when ``max_evals`` evaluations
    do not get there, which is what happens when too few parameters control
    the crossing.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x0 = np.asarray(alpha0, dtype=float).reshape(model.param_dim)
    if not model.contains(x0):
        raise ValueError(f"starting point {x0.tolist()} outside the parameter box")
    target = max(tol, GAP_FLOOR)
    polish = min(target, GAP_FLOOR)
    lower, upper = model.lower, model.upper
    rng = np.random.default_rng(seed)
    best = {"x": x0.copy(), "f": math.inf, "n": 0}

    def objective(x):
        best["n"] += 1
        try:
            g, _ = model.gap_at(np.clip(x, lower, upper))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            return math.inf
        if g < best["f"]:
            best["f"], best["x"] = g, np.clip(x, lower, upper).copy()
        return g

    def stop(intermediate_result):
        if best["f"] <= polish:
            raise StopIteration

    objective(x0)
    scale = 0.05 * float(np.min(upper - lower))
    while best["f"] > polish:
        remaining = max_evals - best["n"]
        if remaining <= model.param_dim + 1:
            break
        minimize(
            objective,
            best["x"],
            method="Nelder-Mead",
            bounds=list(model.param_box),
            callback=stop,
            options={
                "maxfev": remaining,
                "initial_simplex": _simplex(best["x"], scale, lower, upper, rng),
                "xatol": 1e-14,
                "fatol": 0.1 * polish,
            },
        )
        # restart around the incumbent with a smaller simplex; cycle back when tiny
        scale = scale * 0.1 if scale > 1e-9 else 0.05 * float(np.min(upper - lower))

    gap_value, level = model.gap_at(best["x"])
    if gap_value > target:
        raise RefinementFailed(best["x"], gap_value, best["n"], level)
    values, vectors = eigh(model.hamiltonian(best["x"]))
    op = construct_pair_operator(vectors[:, level], vectors[:, level + 1])
    report = verify_has(op, model.hamiltonian(best["x"]))
    return DegeneracyPoint(best["x"], gap_value, level, report, best["n"])


@dataclass
class PointAnalysis:
    alpha: np.ndarray
    hamiltonian: np.ndarray
    eigenvalues: np.ndarray
    subspaces: list[DegenerateSubspace]
    reports: list[list[HasReport]]  # per subspace, one per constructed operator
    near_degenerate: bool
    closing_report: HasReport  # operator from the closing adjacent pair
    pauli: PauliVector | None = None
    constraint_residual: np.ndarray | None = None
    upsilon_residual: float | None = None

    def max_residual(self) -> float:
        rs = [r for group in self.reports for r in group] or [self.closing_report]
        return max(max(r) for r in rs)


def analyze_point(model: ParametricModel, point: DegeneracyPoint, rel_tol: float = 1e-8) -> PointAnalysis:
    """Recompute ``H(alpha)`` and run detect, construct and verify on it.

    When no cluster is found at ``rel_tol`` the result is flagged
    ``near_degenerate`` and only the closing-pair operator is reported.
    """
    h = model.hamiltonian(point.alpha)
    values, vectors = eigh(h)
    subspaces = detect_degenerate_subspaces(h, rel_tol)
    reports = [[verify_has(op, h) for op in construct_nfold_operators(s)] for s in subspaces]
    i = point.level_index
    closing = verify_has(construct_pair_operator(vectors[:, i], vectors[:, i + 1]), h)
    out = PointAnalysis(
        np.asarray(point.alpha, dtype=float), h, values, subspaces, reports, not subspaces, closing
    )
    if model.dim == 2:
        out.pauli = pauli_decompose(h)
        out.constraint_residual = constraint_residual(out.pauli)
        out.upsilon_residual = canonical_upsilon_check(h).residual
    return out


@dataclass
class ScanResult:
    field: GapField
    points: list[DegeneracyPoint]
    failures: list[RefinementFailed]


def merge_points(model: ParametricModel, points: list[DegeneracyPoint], distance: float = MERGE_DISTANCE):
    """Collapse points closer than ``distance`` modulo the model periodicity.

    The first point of each group keeps its slot; the smallest gap wins.
    """
    kept: list[DegeneracyPoint] = []
    for p in points:
        for j, q in enumerate(kept):
            if model.distance(p.alpha, q.alpha) <= distance:
                if p.gap_value < q.gap_value:
                    kept[j] = p
                break
        else:
            kept.append(p)
    return kept


def scan(
    model: ParametricModel,
    resolution,
    *,
    tol: float = 1e-10,
    seed: int = 0,
    threshold: float | None = None,
    max_evals: int = MAX_EVALS,
) -> ScanResult:
    """Grid scan followed by refinement of every seed minimum.

    Candidate ``i`` is refined with the seed sequence ``(seed, i)`` so results
    do not depend on how many candidates there are or how they are scheduled.
    """
    gf = grid_scan(model, resolution, threshold)
    found, failures = [], []
    for i, m in enumerate(gf.minima):
        try:
            found.append(refine(model, m.alpha, tol=tol, seed=(seed, i), max_evals=max_evals))
        except RefinementFailed as exc:
            failures.append(exc)
    return ScanResult(gf, merge_points(model, found), failures)
