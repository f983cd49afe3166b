"""Acceptance gate: one marked test per criterion, each at its stated tolerance.

The terminal summary prints one PASS/FAIL line per criterion.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ELL, make_datum
from reflexive.characters import Character, admissible_pair, check_admissible, normalize_pair, pair_from_slice
from reflexive.families import coordinate_scaling, dumbbell_field, signed_coordinate_scaling, stacked_field
from reflexive.flat_surfaces import (
    EuclideanCylinder,
    SlitDumbbellSurface,
    discrete_extremal_length_oracle,
    dumbbell_core_extremal_lengths,
)
from reflexive.height_field import directional_derivative, height, log_ext_jacobian, mismatch, mismatches
from reflexive.homology_config import build_slice_chart
from reflexive.hypothesis_audit import audit_degeneration, audit_pushability, audit_regularity, sample_points
from reflexive.reflexive_solver import grid_scan, push_descent

B_ELL = (0.5 + math.sqrt(4.25)) / 2


@pytest.mark.criterion(1, "dumbbell reflexive point from 20 random starts")
def test_criterion_1_reflexive_point():
    f = dumbbell_field(ELL)
    push = signed_coordinate_scaling(f)
    rng = np.random.default_rng(20240601)
    assert B_ELL == pytest.approx(1.2807764064, abs=1e-10)
    for u0 in rng.uniform(0.6, 3.0, (20, 2)):
        t0 = time.perf_counter()
        res = push_descent(f, push, u0)
        elapsed = time.perf_counter() - t0
        assert res.status == "reflexive"
        assert np.max(np.abs(res.u_star - B_ELL)) < 1e-6
        assert height(f, res.u_star) < 1e-12
        assert elapsed < 1.0


@pytest.mark.criterion(2, "closed-form extremal lengths, exact and floating point")
def test_criterion_2_closed_forms():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        ell = Fraction(int(rng.integers(1, 200)), int(rng.integers(1, 100)))
        b = ell + Fraction(int(rng.integers(1, 500)), int(rng.integers(1, 100)))
        c = ell + Fraction(int(rng.integers(1, 500)), int(rng.integers(1, 100)))
        exact = dumbbell_core_extremal_lengths(SlitDumbbellSurface(b, c, ell))
        assert exact == {"alpha1": 1 / (b - ell), "beta1": b, "alpha2": 1 / (c - ell), "beta2": c}
        fl = dumbbell_core_extremal_lengths(SlitDumbbellSurface(float(b), float(c), float(ell)))
        # reference from the exact values of the float inputs
        bf, cf, lf = Fraction(float(b)), Fraction(float(c)), Fraction(float(ell))
        ref = {"alpha1": 1 / (bf - lf), "beta1": bf, "alpha2": 1 / (cf - lf), "beta2": cf}
        for k in ref:
            assert abs(Fraction(fl[k]) - ref[k]) <= Fraction(1, 10 ** 14) * abs(ref[k])


@pytest.mark.criterion(3, "height matches the closed-form sum of squared logs")
def test_criterion_3_height_formula():
    f = dumbbell_field(ELL)
    rng = np.random.default_rng(3)
    for b, c in rng.uniform(ELL + 1e-2, 10.0, (1000, 2)):
        expected = math.log(b * (b - ELL)) ** 2 + math.log(c * (c - ELL)) ** 2
        assert abs(height(f, [b, c]) - expected) < 1e-12


@pytest.mark.criterion(4, "regularity audit, positive control")
def test_criterion_4_regularity_positive():
    f = dumbbell_field(ELL)
    samples = sample_points(f, 50, seed=4)
    assert len(samples) == 50
    for b, c in samples:
        JI = log_ext_jacobian(f, [b, c], "I")
        JII = log_ext_jacobian(f, [b, c], "II")
        assert np.max(np.abs(JI - np.diag([-1 / (b - ELL), -1 / (c - ELL)]))) < 1e-5
        assert np.max(np.abs(JII - np.diag([1 / b, 1 / c]))) < 1e-5
    assert audit_regularity(f, samples, seed=4).verdict == "pass"


@pytest.mark.criterion(5, "regularity audit, negative control and stalled solver")
def test_criterion_5_regularity_negative():
    f = stacked_field()
    samples = sample_points(f, 50, seed=5)
    rep = audit_regularity(f, samples, seed=5)
    assert rep.verdict == "fail"
    assert len(rep.evidence) == 50
    for e in rep.evidence:
        q = e["quantities"]
        assert q["jacobian_norm_I"] < 1e-8 and q["jacobian_norm_II"] < 1e-8
    u0 = [0.2, 0.3, 0.1, 0.6]
    res = push_descent(f, coordinate_scaling(f), u0)
    assert res.status == "stalled"
    assert res.H_star == height(f, u0) > 0


@pytest.mark.criterion(6, "degeneration probe along boundary rays")
def test_criterion_6_degeneration():
    f = dumbbell_field(ELL)
    near = float(np.max(np.abs(mismatches(f, [ELL + 1e-2, 2.0]))))
    far = float(np.max(np.abs(mismatches(f, [100.0, 2.0]))))
    assert near > 5.27 and near == pytest.approx(-math.log(0.51 * 0.01), rel=1e-12)
    assert far > 9.20
    assert audit_degeneration(f, blow_threshold=5).verdict == "pass"


@pytest.mark.criterion(7, "pushability derivative and H3 audit")
def test_criterion_7_pushability():
    f = dumbbell_field(ELL)
    samples = sample_points(f, 100, seed=7)
    plain = coordinate_scaling(f)
    for u in samples:
        b = u[0]
        d = directional_derivative(lambda x: mismatch(f, x, "alpha1"), f, u, plain("alpha1", u))
        expected = -(1 + b / (b - ELL))
        assert abs(d - expected) <= 1e-6 * abs(expected)
    push = signed_coordinate_scaling(f)
    assert all(push.incidence[g] == {g} for g in f.curves.curves)
    assert audit_pushability(f, push, samples, seed=7).verdict == "pass"


@pytest.mark.criterion(8, "grid scan and resistor-network oracle agreement")
def test_criterion_8_oracles():
    f = dumbbell_field(ELL)
    scan = grid_scan(f, [(0.6, 3.0), (0.6, 3.0)], [241, 241])
    u_star = push_descent(f, signed_coordinate_scaling(f), [2.5, 0.8]).u_star
    assert np.max(np.abs(scan.argmin - u_star)) <= 0.01 + 1e-12
    rng = np.random.default_rng(8)
    for _ in range(10):
        w, h = rng.uniform(0.2, 5.0, 2)
        n = int(rng.integers(32, 65))
        est = discrete_extremal_length_oracle(EuclideanCylinder(w, h), n)
        assert abs(est - w / h) <= 0.01 * (w / h)


def _cone_scaling(rng):
    eye = np.eye(4, dtype=int)
    edges = ["a1", "a2", "b1", "b2"]
    d = make_datum(edges, {e: eye[k] for k, e in enumerate(edges)},
                   {"a1": "h", "a2": "h", "b1": "v", "b2": "v"}, genus=2, extra=[[1.0, -1.0, 0.0, 0.0]])
    chart = build_slice_chart(d, "a1")
    for _ in range(200):
        x = chart.embed(rng.uniform(0.05, 10, chart.dim)) * rng.uniform(0.01, 100)
        assert np.all(x > 0) and np.max(chart.space.residuals(x)) < 1e-9 * np.max(x)


def _admissibility_round_trip(rng):
    eye = np.eye(4, dtype=int)
    edges = ["a1", "a2", "b1", "b2"]
    d = make_datum(edges, {e: eye[k] for k, e in enumerate(edges)},
                   {"a1": "h", "a2": "h", "b1": "v", "b2": "v"}, genus=2,
                   sigma={"a1": "a2", "a2": "a1", "b1": "b2", "b2": "b1"})
    chart = build_slice_chart(d, "a1")
    for _ in range(200):
        pair = pair_from_slice(chart, rng.uniform(0.05, 20, chart.dim))
        z0 = complex(np.exp(1j * rng.uniform(0, 2 * np.pi)))
        rotated = admissible_pair(Character(pair.chi_I.values * z0), Character(pair.chi_II.values / z0), d)
        back = normalize_pair(rotated)
        res = check_admissible(back.chi_I, back.chi_II, d)
        assert res.admissible and abs(res.zeta - 1) < 1e-12 and abs(res.kappa - 1) < 1e-12
        assert np.allclose(back.chi_I.values, pair.chi_I.values, rtol=1e-12, atol=1e-12)


def _swap_antisymmetry(rng):
    f = dumbbell_field(ELL)
    g = f.swapped()
    for u in rng.uniform(ELL + 1e-3, 20, (500, 2)):
        assert np.allclose(mismatches(g, u), -mismatches(f, u), rtol=0, atol=1e-14)


def _height_nonnegative(rng):
    f = dumbbell_field(ELL)
    pts = list(rng.uniform(ELL + 1e-3, 20, (500, 2))) + [np.array([B_ELL, B_ELL])]
    for u in pts:
        m, H = mismatches(f, u), height(f, u)
        assert H >= 0 and (H == 0) == bool(np.all(m == 0))
        assert math.isclose(H, float(np.dot(m, m)), rel_tol=1e-15, abs_tol=0)


def _monotone_traces(rng):
    f = dumbbell_field(ELL)
    push = signed_coordinate_scaling(f)
    for u0 in rng.uniform(ELL + 1e-3, 3.0, (20, 2)):
        Hs = [H for _, H, _ in push_descent(f, push, u0).trace]
        assert all(b < a for a, b in zip(Hs, Hs[1:]))


@pytest.mark.criterion(9, "property suites in under 10 s")
def test_criterion_9_properties():
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    for check in (_cone_scaling, _admissibility_round_trip, _swap_antisymmetry,
                  _height_nonnegative, _monotone_traces):
        check(rng)
    assert time.perf_counter() - t0 < 10.0
