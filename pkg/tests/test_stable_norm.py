import math

import numpy as np
import pytest

from relgrowth.errors import DimensionMismatch, InvalidParameters, ZeroClass
from relgrowth.stable_norm import (
    TorusMetric,
    conformal_cosine,
    constant_metric,
    dual_lower_bound,
    flat_norm,
    identity_metric,
    loop_length_min,
    loop_lengths,
    mather_beta,
    metric_from_csv,
    metric_to_csv,
    stable_norm_dual,
    stable_norm_primal,
    stencil,
    stencil_anisotropy,
    verify_geodesic_growth,
)

from oracles import loop_length_brute

DIAG = [[4.0, 0.0], [0.0, 1.0]]


def smooth_table(R: int) -> TorusMetric:
    def g(x, y):
        a = 1 + 0.3 * math.sin(2 * math.pi * x) * math.cos(2 * math.pi * y)
        b = 0.2 * math.cos(2 * math.pi * (x + y))
        c = 1.2 + 0.25 * math.sin(2 * math.pi * y)
        return [[a, b], [b, c]]

    axes = np.arange(R) / R
    return TorusMetric(2, "table", table=np.array([[g(x, y) for y in axes] for x in axes]))


def test_stencil_shapes():
    assert len(stencil(2, 2)) == 16
    assert len(stencil(2)) == 32
    assert len(stencil(3)) == 26
    assert stencil_anisotropy(2) < stencil_anisotropy(2, 2) < 0.03


@pytest.mark.parametrize("e, expected", [((1, 0), 1.0), ((1, 1), math.sqrt(2)), ((0, 3), 3.0)])
def test_flat_identity_loops(e, expected):
    assert loop_length_min(identity_metric(), e, 16) == pytest.approx(expected, rel=1e-12)


def test_non_primitive_class_is_linear_in_k():
    est = stable_norm_primal(identity_metric(), (2, 0), K=4, R=16)
    assert est.ratios == pytest.approx((2.0,) * 4)


def test_constant_metric_gives_metric_length():
    assert stable_norm_primal(constant_metric(DIAG), (1, 0), K=2, R=16).value == pytest.approx(2.0)


@pytest.mark.parametrize("e", [(1, 0), (1, 1), (2, 1)])
def test_primal_matches_brute_force_dijkstra(e):
    R = 8
    M = smooth_table(R)
    ref = loop_length_brute(lambda q: M.tensor(np.array([q]))[0], e, R)
    assert loop_length_min(M, e, R) == pytest.approx(ref, rel=1e-12)


def test_primal_subadditive_and_homogeneous():
    M = smooth_table(16)
    est = stable_norm_primal(M, (1, 1), K=4, R=16)
    assert est.subadditivity_violations() == []
    double = stable_norm_primal(M, (2, 2), K=2, R=16)
    assert double.value == pytest.approx(2 * est.value, rel=est.anisotropy)
    b1 = mather_beta(M, (1, 1), K=4, R=16)
    b2 = mather_beta(M, (2, 2), K=2, R=16)
    assert b2 == pytest.approx(4 * b1, rel=2 * est.anisotropy)


def test_conformal_primal_constant_in_k():
    est = stable_norm_primal(conformal_cosine(0.3), (0, 1), K=3, R=32)
    assert est.ratios == pytest.approx((0.7, 0.7, 0.7), abs=1e-12)


def test_conformal_transverse_class():
    # along q1 the length is the mean of lambda, which is 1
    est = stable_norm_primal(conformal_cosine(0.3), (1, 0), K=1, R=32)
    assert est.value == pytest.approx(1.0, rel=2e-3)


def test_beta_examples():
    assert mather_beta(identity_metric(), (1, 0), K=1, R=8) == pytest.approx(0.5)
    assert mather_beta(identity_metric(), (3, 4), K=1, R=32) == pytest.approx(12.5, rel=2 * stencil_anisotropy(2))


def test_primal_errors():
    with pytest.raises(ZeroClass):
        stable_norm_primal(identity_metric(), (0, 0))
    with pytest.raises(DimensionMismatch):
        stable_norm_primal(identity_metric(), (1, 0, 0))
    with pytest.raises(InvalidParameters):
        loop_lengths(identity_metric(), (1, 0), R=2)


def test_dual_flat_values():
    d = stable_norm_dual(identity_metric(), (1.0, 0.0), R=16)
    assert d.value == 1.0 and d.slack == 0.0 and d.status == "NO_DESCENT"
    d = stable_norm_dual(identity_metric(), (1.0, 1.0), R=16)
    assert d.upper == pytest.approx(math.sqrt(2))
    # |a|_{g*} for g = diag(4, 1), a = g e with e = (1, 0)
    d = stable_norm_dual(constant_metric(DIAG), (4.0, 0.0), R=16)
    assert d.lower_bound_for((1, 0)) == pytest.approx(2.0)


def test_dual_conformal_along_minimum_line_has_no_descent():
    d = stable_norm_dual(conformal_cosine(0.3), (0.0, 1.0), R=32)
    assert d.status == "NO_DESCENT"
    assert d.value == pytest.approx(1 / 0.7)
    assert d.lower_bound_for((0, 1)) <= 0.7 + 1e-12


def test_dual_descends_towards_exact_value():
    # ||(1,0)||* = 1 / mean(lambda) = 1 for lambda = 1 + 0.3 cos(2 pi q1)
    d = stable_norm_dual(conformal_cosine(0.3), (1.0, 0.0), R=32, iterations=600)
    assert d.status == "OK"
    assert d.value < 1.05 < d.initial
    assert d.upper >= 1.0


def test_dual_is_an_upper_bound_on_table_metric():
    M = smooth_table(16)
    primal = stable_norm_primal(M, (1, 1), K=2, R=16)
    lower, est = dual_lower_bound(M, (1, 1), R=16, iterations=200)
    assert lower <= primal.value + primal.slack


def test_dual_errors():
    with pytest.raises(ZeroClass):
        stable_norm_dual(identity_metric(), (0.0, 0.0))
    with pytest.raises(InvalidParameters):
        stable_norm_dual(identity_metric(), (1.0, 0.0), R=15)


def test_metric_validation():
    with pytest.raises(InvalidParameters):
        constant_metric([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(InvalidParameters):
        conformal_cosine(1.2)


def test_metric_csv_round_trip():
    M = smooth_table(8)
    back = metric_from_csv(metric_to_csv(M, 8))
    assert np.allclose(back.table, M.table)
    Q = np.random.default_rng(0).random((20, 2))
    assert np.allclose(back.tensor(Q), M.tensor(Q))


@pytest.mark.parametrize("metric, e, expected", [
    (identity_metric(), (1, 0), 1.0),
    (constant_metric(DIAG), (1, 0), 2.0),
    (identity_metric(), (3, 4), 5.0),
])
def test_flat_growth_equals_norm(metric, e, expected):
    rep = verify_geodesic_growth(metric, e, K=2, R=32)
    assert rep.ok, rep.violations
    assert rep.notes["gamma"]["value"] == pytest.approx(expected, rel=1e-3)
    assert flat_norm(metric, e) == pytest.approx(expected)


def test_non_flat_growth_bound():
    rep = verify_geodesic_growth(conformal_cosine(0.3), (0, 1), K=1, R=32, dual_R=64)
    assert rep.notes["branch"] == "non_flat"
    assert rep.ok, rep.violations
    assert rep.notes["gamma_lower_bound"] <= 0.7 + 1e-12
