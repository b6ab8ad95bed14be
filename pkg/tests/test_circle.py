import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relgrowth.circle import (
    CircleGroup,
    CircleLift,
    Primitive,
    Harmonic,
    arnold_catalogue,
    dominates,
    flow,
    gamma_exact,
    iterate_at,
    rotation_number,
    translation_e,
)
from relgrowth.errors import InvalidParameters, RotFNearZero
from relgrowth.order_core import Verdict, check_cone_axioms, gamma_k, relative_growth

from oracles import arnold_power, gamma_k_dense, rotation_brute

ARNOLD = [(0.30, 0.05, 0.0), (0.5, 0.1, 0.0), (0.123, 0.08, 0.3), (0.71, 0.12, 1.1)]
amplitude = st.floats(min_value=0.0, max_value=0.15)
shift = st.floats(min_value=-2.0, max_value=2.0)


@pytest.fixture(scope="module")
def model():
    return CircleGroup()


def test_slope_bound_is_enforced():
    with pytest.raises(InvalidParameters):
        CircleLift.arnold(0.3, 0.2)
    with pytest.raises(InvalidParameters):
        Primitive(0.0, (Harmonic(1, 0.1, 0.0), Harmonic(2, 0.05, 0.0)))


@settings(max_examples=40, deadline=None)
@given(shift, amplitude, st.floats(-3, 3))
def test_inverse_round_trip(a, b, phi):
    f = CircleLift.arnold(a, b, phi)
    x = np.linspace(-1.0, 2.0, 101)
    assert np.max(np.abs(f.inverse()(f(x)) - x)) < 1e-12
    assert np.max(np.abs(f(f.inverse()(x)) - x)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(shift, amplitude, st.floats(-3, 3))
def test_lift_commutes_with_integer_translation(a, b, phi):
    f = CircleLift.arnold(a, b, phi)
    x = np.linspace(0, 1, 33)
    assert np.allclose(f(x + 1.0), f(x) + 1.0, atol=1e-12)


def test_composition_order():
    f, g = CircleLift.translation(0.25), CircleLift.arnold(0.0, 0.1)
    x = np.linspace(0, 1, 17)
    assert np.allclose((f @ g)(x), f(g(x)))
    assert np.allclose(f.then(g)(x), g(f(x)))


def test_power_matches_repeated_application():
    f = CircleLift.arnold(*ARNOLD[2])
    x = np.linspace(0, 1, 65)
    assert np.allclose(f.power(7)(x), arnold_power([ARNOLD[2]], 7, x), atol=1e-12)
    assert np.allclose(f.power(-3)(f.power(3)(x)), x, atol=1e-12)


def test_json_round_trip():
    f = CircleLift.primitive(0.2, [(1, 0.03, 0.5), (3, 0.01, -1.0)]) @ CircleLift.arnold(0.1, 0.02).inverse()
    text = f.to_json()
    assert CircleLift.from_json(text) == f
    word = json.loads(text)["word"]
    assert {"a", "harmonics", "inv"} <= set(word[0])


def test_rotation_of_translation_is_exact():
    r = rotation_number(CircleLift.translation(0.7), 1000)
    assert r.value == 0.7 and r.halfwidth == pytest.approx(1e-3)


@pytest.mark.parametrize("params", ARNOLD)
def test_rotation_number_matches_brute_orbit(params):
    r = rotation_number(CircleLift.arnold(*params), 20_000)
    brute = rotation_brute([params], 20_000)
    assert abs(r.value - brute) <= 2 / 20_000
    assert r.contains(brute, slack=1 / 20_000)


def test_iterate_keeps_integer_part():
    f = CircleLift.arnold(*ARNOLD[0])
    direct = float(arnold_power([ARNOLD[0]], 200, np.array([0.0]))[0])
    assert iterate_at(f, 200) == pytest.approx(direct, abs=1e-9)


def test_gamma_exact_errors_and_identity():
    with pytest.raises(RotFNearZero):
        gamma_exact(CircleLift.translation(0.0), translation_e(), 100)
    f = CircleLift.arnold(*ARNOLD[1])
    assert gamma_exact(f, f, 1000).value == 1.0


def test_dominates_gives_witness(model):
    f, g = CircleLift.arnold(0.3, 0.05), CircleLift.translation(0.3)
    v = model.dominates(f, g)
    assert v.verdict is Verdict.NO
    assert float(f(np.array([v.witness]))[0]) < v.witness + 0.3
    assert dominates(CircleLift.translation(0.36), f).yes


def test_translation_example(model):
    assert gamma_k(model, translation_e(), CircleLift.translation(0.5), 3) == 2


@pytest.mark.parametrize("k", [1, 4, 10])
def test_gamma_k_matches_dense_oracle(model, k):
    f, g = CircleLift.arnold(*ARNOLD[0]), translation_e()
    assert gamma_k(model, f, g, k) == gamma_k_dense([ARNOLD[0]], [(1.0, 0.0, 0.0)], k)


def test_gamma_k_pair_matches_dense_oracle(model):
    f, g = CircleLift.arnold(*ARNOLD[3]), CircleLift.arnold(*ARNOLD[0])
    for k in (1, 3, 6):
        assert gamma_k(model, f, g, k) == gamma_k_dense([ARNOLD[3]], [ARNOLD[0]], k)


def test_steep_iterates_are_resolved_locally(model):
    # locked map with slopes ~1e5 near its repelling orbit; the true margin is ~2e-5
    cat = arnold_catalogue()
    v = model.compare_powers(cat[2], 363, cat[1], 68)
    assert v.verdict is Verdict.YES
    x = np.linspace(0, 1, 400_001)
    assert np.min(arnold_power([(0.123, 0.08, 0.3)], 363, x) - arnold_power([(0.5, 0.1, 0.0)], 68, x)) > 0


def test_flow_growth(model):
    for t in (0.25, 0.37):
        est = relative_growth(model, translation_e(), flow(t), 200)
        assert abs(est.trend - t) <= 2e-2
    x = model.xs
    assert np.max(np.abs(flow(3 / 7).power(7)(x) - (x + 3))) <= model.tau


def test_cone_axioms_on_catalogue(model):
    samples = arnold_catalogue()[:4] + [CircleLift.translation(-0.2)]
    rep = check_cone_axioms(model, samples)
    assert rep.ok and not rep.unresolved
    assert rep.notes["skipped_non_members"] == [4]


def test_grid_must_divide_refined():
    with pytest.raises(InvalidParameters):
        CircleGroup(grid=1000, refined_grid=16384)
