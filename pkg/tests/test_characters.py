import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_datum
from reflexive.characters import (
    AdmissiblePair,
    Character,
    admissible_pair,
    check_admissible,
    normalize_pair,
    pair_from_slice,
    period_coordinates,
)
from reflexive.errors import ReflexiveError
from reflexive.homology_config import build_slice_chart

ROT = cmath.exp(1j * cmath.pi / 4)


def test_period_coordinates(toy_datum):
    assert np.all(period_coordinates(Character([0, 0]), toy_datum) == 0)
    assert np.allclose(period_coordinates(Character([1, 2j]), toy_datum), [1, 2j])
    d = make_datum(["e1", "e2", "e3"], {"e1": [1, 0], "e2": [0, 1], "e3": [1, 1]},
                   {"e1": "h", "e2": "v", "e3": "h"}, genus=1, relations=[[1, 1, -1]])
    assert period_coordinates(Character([1, 2j]), d)[2] == 1 + 2j
    with pytest.raises(ReflexiveError, match="dimension_mismatch"):
        period_coordinates(Character([1, 2, 3]), d)


def test_conjugate_pair_admissible(toy_datum):
    res = check_admissible(Character([1, 0.7j]), Character([1, -0.7j]), toy_datum)
    assert res.admissible
    assert res.witness == (1, 1)


def test_rotated_pair_admissible(toy_datum):
    res = check_admissible(Character(np.array([1, 0.7j]) * ROT),
                           Character(np.array([1, -0.7j]) / ROT), toy_datum)
    assert res.admissible
    assert abs(res.zeta - ROT) < 1e-12 and abs(res.kappa - 1) < 1e-12


def test_half_turn_breaks_vertical_ray(toy_datum):
    chi_I, chi_II = Character([-1, 0.7j]), Character([-1, -0.7j])
    res = check_admissible(chi_I, chi_II, toy_datum)
    assert abs(res.zeta + 1) < 1e-12
    assert not res.admissible
    assert ("C1", "e2") in {(v.condition, v.where) for v in res.violations}
    with pytest.raises(ReflexiveError, match="not_in_norm_cone"):
        normalize_pair(AdmissiblePair(chi_I, chi_II, res.zeta, res.kappa, toy_datum))


def test_missing_conjugation(toy_datum):
    res = check_admissible(Character([1, 0.7j]), Character([1, 0.7j]), toy_datum)
    assert not res.admissible
    assert {(v.condition, v.where) for v in res.violations} >= {("C3", "e2")}


def test_zero_period_at_e0(toy_datum):
    with pytest.raises(ReflexiveError, match="zero_period_e0"):
        check_admissible(Character([0, 1j]), Character([0, -1j]), toy_datum)


def test_kernel_relations_hold_for_any_character():
    d = make_datum(["e1", "e2", "e3"], {"e1": [1, 0], "e2": [0, 1], "e3": [1, 0]},
                   {"e1": "h", "e2": "v", "e3": "h"}, genus=1, relations=[[1, 0, -1]])
    # e1 and e3 share a class, so any character satisfies the relation
    assert check_admissible(Character([2, 1j]), Character([2, -1j]), d).admissible


def test_normalize(toy_datum):
    base = admissible_pair(Character([1, 0.7j]), Character([1, -0.7j]), toy_datum)
    again = normalize_pair(base)
    assert np.allclose(again.chi_I.values, base.chi_I.values)
    assert np.allclose(again.chi_II.values, base.chi_II.values)
    rotated = admissible_pair(Character(np.array([1, 0.7j]) * ROT),
                              Character(np.array([1, -0.7j]) / ROT), toy_datum)
    norm = normalize_pair(rotated)
    assert np.allclose(norm.chi_I.values, [1, 0.7j], atol=1e-12)
    assert np.allclose(norm.chi_II.values, [1, -0.7j], atol=1e-12)
    assert norm.zeta == 1 and norm.kappa == 1


def test_pair_from_dumbbell_slice(dumbbell_datum):
    chart = build_slice_chart(dumbbell_datum, "a1")
    pair = pair_from_slice(chart, [2.0, 3.0])
    assert np.allclose(period_coordinates(pair.chi_I, dumbbell_datum), [1, 1, 2j, 3j], atol=1e-12)
    assert np.allclose(period_coordinates(pair.chi_II, dumbbell_datum), [1, 1, -2j, -3j], atol=1e-12)
    guard = lambda p: 0.5 < min(p)
    with pytest.raises(ReflexiveError, match="out_of_domain"):
        pair_from_slice(chart, [0.1, 3.0], guard=guard)
    with pytest.raises(ReflexiveError, match="out_of_domain"):
        pair_from_slice(chart, [-1.0, 3.0])


def test_pair_from_point_chart():
    d = make_datum(["e1"], {"e1": [1]}, {"e1": "h"}, genus=0, punctures=2)
    pair = pair_from_slice(build_slice_chart(d, "e1"), [])
    assert np.allclose(period_coordinates(pair.chi_I, d), [1])


def test_serialization(toy_datum):
    pair = admissible_pair(Character([1, 0.7j]), Character([1, -0.7j]), toy_datum)
    data = pair.to_dict()
    assert data["zeta"] == [1.0, 0.0] and data["chi_I"] == [[1.0, 0.0], [0.0, 0.7]]
    assert np.allclose(Character.from_list(data["chi_II"]).values, pair.chi_II.values)


def _sigma_datum():
    # two horizontal and two vertical edges, sigma swaps within types
    eye = np.eye(4, dtype=int)
    edges = ["a1", "a2", "b1", "b2"]
    return make_datum(edges, {e: eye[k] for k, e in enumerate(edges)},
                      {"a1": "h", "a2": "h", "b1": "v", "b2": "v"}, genus=2,
                      sigma={"a1": "a2", "a2": "a1", "b1": "b2", "b2": "b1"})


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.05, 20), min_size=3, max_size=3))
def test_slice_round_trip(params):
    d = _sigma_datum()
    chart = build_slice_chart(d, "a1")
    pair = pair_from_slice(chart, params)
    res = check_admissible(pair.chi_I, pair.chi_II, d, tol=1e-12)
    assert res.admissible
    assert abs(res.zeta - 1) < 1e-12 and abs(res.kappa - 1) < 1e-12
    assert abs(period_coordinates(pair.chi_I, d)[0] - 1) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * np.pi), st.lists(st.floats(0.05, 20), min_size=3, max_size=3))
def test_rotation_covariance(theta, params):
    d = _sigma_datum()
    pair = pair_from_slice(build_slice_chart(d, "a1"), params)
    z0 = cmath.exp(1j * theta)
    rotated = admissible_pair(Character(pair.chi_I.values * z0), Character(pair.chi_II.values / z0), d)
    back = normalize_pair(rotated)
    pI, pII = period_coordinates(pair.chi_I, d), period_coordinates(pair.chi_II, d)
    assert np.max(np.abs(period_coordinates(back.chi_I, d) - pI)) < 1e-12 * max(1, np.max(np.abs(pI)))
    assert np.max(np.abs(period_coordinates(back.chi_II, d) - pII)) < 1e-12 * max(1, np.max(np.abs(pII)))


def test_relations_vanish_on_slice_pairs():
    iota = {"a1": [1, 0, 0], "a2": [1, 0, 0], "b1": [0, 1, 0], "b2": [0, 0, 1]}
    tau = {"a1": "h", "a2": "h", "b1": "v", "b2": "v"}
    d = make_datum(list(iota), iota, tau, genus=1, punctures=2, relations=[[1, -1, 0, 0]])
    chart = build_slice_chart(d, "a1")
    rng = np.random.default_rng(11)
    for _ in range(25):
        pair = pair_from_slice(chart, rng.uniform(0.1, 4, chart.dim))
        pI = period_coordinates(pair.chi_I, d)
        pII = period_coordinates(pair.chi_II, d)
        for r in d.relations:
            assert abs(np.dot(r, pI)) < 1e-12
            assert abs(np.dot(r, pII[[d.index(d.sigma[e]) for e in d.edges]])) < 1e-12


@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
def test_positive_scaling_leaves_cone_but_not_slice(lam):
    d = _sigma_datum()
    pair = pair_from_slice(build_slice_chart(d, "a1"), [2.0, 0.5, 1.5])
    scaled_I, scaled_II = Character(pair.chi_I.values * lam), Character(pair.chi_II.values * lam)
    res = check_admissible(scaled_I, scaled_II, d)
    assert res.admissible and abs(res.zeta - 1) < 1e-12 and abs(res.kappa - 1) < 1e-12
    on_slice = abs(period_coordinates(scaled_I, d)[0] - 1) < 1e-12
    assert on_slice == (lam == 1.0)
