import math

import numpy as np
import pytest
from scipy.optimize import minimize

from hasym.scanner import (
    DegeneracyPoint,
    ParametricModel,
    RefinementFailed,
    UnknownModelError,
    analyze_point,
    builtin_models,
    freeze,
    get_model,
    grid_scan,
    honeycomb_k,
    merge_points,
    refine,
    scan,
)

A1 = np.array([1.5, math.sqrt(3) / 2])
A2 = np.array([1.5, -math.sqrt(3) / 2])


def honeycomb_oracle(n=512):
    """Dirac points from an independent Cartesian-momentum scan.

    |f(k)| with f = 1 + e^{ik.a1} + e^{ik.a2} is evaluated on an n x n grid of
    the reciprocal cell, grid minima are polished with BFGS on |f|^2 and the
    results are folded back into fractional coordinates mod 1.
    """
    b = 2 * np.pi * np.linalg.inv(np.vstack([A1, A2])).T
    s = np.arange(n) / n
    s1, s2 = np.meshgrid(s, s, indexing="ij")
    k = s1[..., None] * b[0] + s2[..., None] * b[1]
    f = np.abs(1 + np.exp(1j * k @ A1) + np.exp(1j * k @ A2))
    # periodic 8-neighbour minima
    mins = np.ones_like(f, dtype=bool)
    for d1 in (-1, 0, 1):
        for d2 in (-1, 0, 1):
            if d1 or d2:
                mins &= f <= np.roll(np.roll(f, d1, 0), d2, 1)
    found = []
    for i, j in zip(*np.nonzero(mins & (f < 0.5))):
        k0 = k[i, j]
        obj = lambda q: abs(1 + np.exp(1j * q @ A1) + np.exp(1j * q @ A2)) ** 2  # noqa: E731
        kq = minimize(obj, k0, method="BFGS", options={"gtol": 1e-14}).x
        assert math.sqrt(obj(kq)) < 1e-6
        frac = np.linalg.solve(b.T, kq) % 1.0
        if not any(np.linalg.norm((frac - g + 0.5) % 1.0 - 0.5) < 1e-4 for g in found):
            found.append(frac)
    return sorted(found, key=tuple)


def test_registry():
    names = [m.name for m in builtin_models()]
    assert {"linear2", "honeycomb", "piflux"} <= set(names)
    with pytest.raises(UnknownModelError) as info:
        get_model("nope")
    assert "linear2" in str(info.value)


def test_models_close_gap_at_known_points():
    assert get_model("linear2").gap_at([0, 0, 0])[0] == 0
    assert get_model("piflux").gap_at([math.pi / 2, math.pi / 2])[0] < 1e-15
    assert get_model("honeycomb").gap_at([1 / 3, 2 / 3])[0] < 1e-14


def test_linear2_gap_closed_form():
    m = get_model("linear2")
    rng = np.random.default_rng(0)
    for a in rng.uniform(-2, 2, (200, 3)):
        assert abs(m.gap_at(a)[0] - 2 * np.linalg.norm(a)) <= 1e-12


def test_honeycomb_matches_cartesian_formula():
    m = get_model("honeycomb")
    rng = np.random.default_rng(1)
    for s in rng.uniform(0, 1, (50, 2)):
        k = honeycomb_k(s)
        f = 1 + np.exp(1j * k @ A1) + np.exp(1j * k @ A2)
        assert abs(m.gap_at(s)[0] - 2 * abs(f)) < 1e-12


def test_honeycomb_two_dirac_points_oracle():
    oracle = honeycomb_oracle()
    assert len(oracle) == 2
    np.testing.assert_allclose(oracle, [[1 / 3, 2 / 3], [2 / 3, 1 / 3]], atol=1e-6)
    res = scan(get_model("honeycomb"), 256)
    got = [p.alpha % 1.0 for p in res.points]
    assert len(got) == 2
    for o in oracle:
        assert min(np.max(np.abs(g - o)) for g in got) <= 1e-6


class TestGridScan:
    def test_linear2_unique_origin_minimum(self):
        gf = grid_scan(get_model("linear2"), 21)
        assert gf.resolution == (21, 21, 21)
        (m,) = gf.minima
        assert m.index == (10, 10, 10) and m.gap == 0.0

    def test_piflux_four_minima(self):
        gf = grid_scan(get_model("piflux"), 64)
        assert len(gf.minima) == 4
        step = 2 * math.pi / 63
        for m in gf.minima:
            assert np.all(np.abs(np.abs(m.alpha) - math.pi / 2) <= step)

    def test_honeycomb_minima_two_points(self):
        gf = grid_scan(get_model("honeycomb"), 256)
        pts = np.array([m.alpha for m in gf.minima])
        assert len(pts) == 2
        np.testing.assert_allclose(sorted(map(tuple, pts)), [[1 / 3, 2 / 3], [2 / 3, 1 / 3]], atol=1 / 255)

    def test_deterministic(self):
        a = grid_scan(get_model("honeycomb"), 40)
        b = grid_scan(get_model("honeycomb"), 40)
        np.testing.assert_array_equal(a.gaps, b.gaps)
        assert a.to_csv() == b.to_csv()

    def test_generic_path_matches_pauli_path(self):
        pf = get_model("piflux")
        generic = ParametricModel("g", 2, pf.param_box, pf.evaluator, 2, periods=pf.periods)
        a, b = grid_scan(pf, 17), grid_scan(generic, 17)
        np.testing.assert_allclose(a.gaps, b.gaps, atol=1e-14)
        assert [m.index for m in a.minima] == [m.index for m in b.minima]

    def test_invalid_nodes_recorded(self):
        def evaluator(a):
            if a[0] > 0.5:
                raise ValueError("outside domain")
            return np.diag([0.0, abs(a[0] - 0.2) + 0.1])

        m = ParametricModel("broken", 1, ((0.0, 1.0),), evaluator, 2)
        gf = grid_scan(m, 11, threshold=1.0)
        assert len(gf.invalid) == 5
        assert np.isnan(gf.gaps[6:]).all()
        assert [x.index for x in gf.minima] == [(2,)]

    def test_validation(self):
        with pytest.raises(ValueError):
            grid_scan(get_model("piflux"), 1)
        with pytest.raises(ValueError):
            grid_scan(get_model("piflux"), (4, 4, 4))

    def test_csv_format(self):
        text = grid_scan(get_model("piflux"), 3).to_csv()
        lines = text.split("\n")
        assert lines[0] == "alpha1,alpha2,gap"
        assert len(lines) == 3 * 3 + 2 and lines[-1] == ""
        a1, a2, g = lines[1].split(",")
        assert float(a1) == -math.pi and float(g) == get_model("piflux").gap_at([-math.pi, -math.pi])[0]
        assert "\r" not in text


class TestRefine:
    def test_linear2(self):
        p = refine(get_model("linear2"), (0.5, -0.3, 0.2))
        assert np.linalg.norm(p.alpha) <= 1e-6 and p.gap_value <= 1e-10
        assert abs(p.gap_value - 2 * np.linalg.norm(p.alpha)) <= 1e-12
        assert p.has_report.passes(1e-8)
        assert p.evaluations <= 2000

    def test_piflux(self):
        p = refine(get_model("piflux"), (1.4, 1.7))
        np.testing.assert_allclose(p.alpha, [math.pi / 2] * 2, atol=1e-6)

    def test_frozen_parameter_floor(self):
        m = freeze(get_model("linear2"), {2: 0.1})
        with pytest.raises(RefinementFailed) as info:
            refine(m, (0.5, -0.3))
        assert info.value.gap == pytest.approx(0.2, abs=1e-6)
        assert info.value.evaluations <= 2000

    def test_reproducible(self):
        m = get_model("linear2")
        a, b = refine(m, (1, 1, 1), seed=3), refine(m, (1, 1, 1), seed=3)
        np.testing.assert_array_equal(a.alpha, b.alpha)

    def test_start_outside_box(self):
        with pytest.raises(ValueError):
            refine(get_model("linear2"), (3, 0, 0))

    def test_recompute_gap(self):
        m = get_model("piflux")
        p = refine(m, (1.4, 1.7))
        assert p.recompute_gap(m) == p.gap_value


class TestAnalyze:
    def test_linear2_origin(self):
        m = get_model("linear2")
        a = analyze_point(m, DegeneracyPoint(np.zeros(3), 0.0, 0))
        assert not a.near_degenerate
        (rep,) = a.reports[0]
        assert rep.square_residual <= 1e-12 and rep.commutator_residual <= 1e-12
        np.testing.assert_array_equal(a.constraint_residual, [0, 0, 0])
        assert a.upsilon_residual == 0

    def test_piflux_point(self):
        m = get_model("piflux")
        a = analyze_point(m, refine(m, (1.4, 1.7)))
        assert a.max_residual() <= 1e-10
        np.testing.assert_allclose(a.pauli, [0, 0, 0, 0], atol=1e-11)

    def test_honeycomb_point(self):
        m = get_model("honeycomb")
        a = analyze_point(m, refine(m, (0.3, 0.7)))
        assert a.max_residual() <= 1e-8

    def test_near_degenerate_flag(self):
        m = get_model("linear2")
        a = analyze_point(m, DegeneracyPoint(np.array([0.1, 0, 0]), 0.2, 0))
        assert a.near_degenerate and a.subspaces == []
        assert a.closing_report.commutator_residual > 0


def test_merge_points_periodic():
    m = get_model("honeycomb")
    pts = [DegeneracyPoint(np.array([0.0, 0.5]), 1e-12, 0), DegeneracyPoint(np.array([1.0 - 1e-6, 0.5]), 1e-13, 0)]
    (kept,) = merge_points(m, pts)
    assert kept.gap_value == 1e-13


def test_freeze_validation():
    with pytest.raises(ValueError):
        freeze(get_model("linear2"), {0: 5.0})
    with pytest.raises(ValueError):
        freeze(get_model("linear2"), {0: 0.0, 1: 0.0, 2: 0.0})
