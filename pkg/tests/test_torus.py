import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relgrowth import torus
from relgrowth.errors import DimensionMismatch, FNotPositive, HypothesisFailed, InvalidParameters, ZeroClass
from relgrowth.torus import (
    combine,
    euclidean_norm,
    gamma_torus,
    growth_lower_bound,
    hamiltonian,
    kappa_torus,
    linear,
    shape_values,
    weighted_norm,
    zk_embed,
)

from oracles import sphere_max_dense


def affine_G():
    return combine([(0.5, euclidean_norm()), (1.0, linear([1.0, 0.0]))])


@pytest.mark.parametrize(
    "G, expected",
    [(lambda: euclidean_norm().scaled(2.0), 2.0), (lambda: linear([1.0, 0.0]), 1.0), (affine_G, 1.5)],
    ids=["scaling", "linear", "affine"],
)
def test_gamma_torus_catalogue(G, expected):
    G = G()
    g = gamma_torus(euclidean_norm(), G)
    dense, _ = sphere_max_dense(euclidean_norm(), G)
    assert g.enclosure.contains(expected, slack=1e-12)
    assert g.enclosure.contains(dense, slack=1e-12)
    assert g.enclosure.width < 1e-3


def test_gamma_torus_off_grid_maximiser():
    F = weighted_norm([[2.0, 0.3], [0.3, 0.7]])
    G = linear([0.6, -1.3])
    g = gamma_torus(F, G)
    dense, _ = sphere_max_dense(F, G)
    assert g.enclosure.contains(dense, slack=1e-9)
    # closed form: max <p, e>/|p|_A = sqrt(e A^{-1} e)
    e = np.array([0.6, -1.3])
    exact = math.sqrt(e @ np.linalg.inv([[2.0, 0.3], [0.3, 0.7]]) @ e)
    assert g.refined == pytest.approx(exact, abs=1e-9)


def test_gamma_torus_errors():
    with pytest.raises(FNotPositive):
        gamma_torus(linear([1.0, 0.0]), euclidean_norm())
    with pytest.raises(DimensionMismatch):
        gamma_torus(euclidean_norm(2), euclidean_norm(3))
    with pytest.raises(HypothesisFailed):
        gamma_torus(euclidean_norm(), euclidean_norm().scaled(-1.0))


def test_rejects_non_autonomous():
    with pytest.raises(InvalidParameters):
        hamiltonian({"name": "euclidean_norm", "q_dependent": True})
    with pytest.raises(InvalidParameters):
        hamiltonian({"name": "nope"})


def positive_hamiltonians():
    def build(kind, c, angle, s):
        if kind == 0:
            return euclidean_norm().scaled(s)
        if kind == 1:
            R = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
            return weighted_norm(R @ np.diag([s, 1.0 / s]) @ R.T)
        return combine([(1.0, euclidean_norm()), (c, linear([math.cos(angle), math.sin(angle)]))])

    return st.builds(build, st.integers(0, 2), st.floats(0.0, 0.8), st.floats(0.0, 6.28), st.floats(0.5, 2.0))


@settings(max_examples=25, deadline=None)
@given(positive_hamiltonians(), positive_hamiltonians())
def test_product_of_growths_at_least_one(F, G):
    prod = gamma_torus(F, G, refine=False).value * gamma_torus(G, F, refine=False).value
    assert prod >= 1.0 - 1e-12


@settings(max_examples=25, deadline=None)
@given(positive_hamiltonians(), positive_hamiltonians(), positive_hamiltonians())
def test_triangle_inequality_on_grid(F, G, H):
    g = lambda A, B: gamma_torus(A, B, refine=False).value
    assert g(F, H) <= g(F, G) * g(G, H) * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(positive_hamiltonians(), positive_hamiltonians(), st.integers(2, 9))
def test_iterates_are_isometric_exactly(F, G, m):
    assert gamma_torus(F.iterate(m), G.iterate(m), refine=False).value == gamma_torus(F, G, refine=False).value


@settings(max_examples=25, deadline=None)
@given(positive_hamiltonians(), positive_hamiltonians())
def test_kappa_is_sup_log_distance(F, G):
    H = euclidean_norm()
    assert kappa_torus(F, G) == pytest.approx(zk_embed(F, H).sup_distance(zk_embed(G, H)), abs=1e-12)


def test_conjugation_collapses_kappa():
    F = combine([(1.0, euclidean_norm()), (0.4, linear([1.0, 0.0]))])
    assert kappa_torus(F, F.conjugate_by_shift([0.2, 0.7])) == 0.0


def test_scalar_multiple_product_is_one():
    F = weighted_norm([[1.5, 0.2], [0.2, 0.8]])
    p = gamma_torus(F, F.scaled(3.0)).value * gamma_torus(F.scaled(3.0), F).value
    assert p == pytest.approx(1.0, abs=1e-12)


def test_shape_examples():
    assert shape_values([1.0, 0.0], torus.zero()).r_plus == 0.0
    assert shape_values([3.0, 4.0], euclidean_norm()).r_minus == pytest.approx(5.0)
    assert shape_values([2.0, 0.0], linear([1.0, 0.0])).r_plus == 2.0
    assert shape_values([1.0, 0.0], euclidean_norm().iterate(3)).r_plus == 3.0
    assert shape_values([2.5, 0.0], euclidean_norm()).r_plus == 2.5
    assert shape_values([0.0, 1.0], euclidean_norm().inverse()).r_plus == -1.0
    with pytest.raises(ZeroClass):
        shape_values([0.0, 0.0], euclidean_norm())


@settings(max_examples=20, deadline=None)
@given(positive_hamiltonians(), positive_hamiltonians(), st.floats(0.1, 5.0), st.integers(1, 6),
       st.tuples(st.floats(-3, 3), st.floats(-3, 3)).filter(lambda a: abs(a[0]) + abs(a[1]) > 1e-3))
def test_shape_properties_hold(F, G, c, k, a):
    rep = torus.check_shape_properties(F, G, list(a), c, k)
    assert rep.ok, rep.violations


def test_growth_lower_bound_examples():
    F, G = euclidean_norm(), linear([1.0, 0.0])
    assert growth_lower_bound(F, G, [1.0, 0.0]) == pytest.approx(gamma_torus(F, G).value)
    assert growth_lower_bound(F, G, [1.0, 1.0]) == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(HypothesisFailed):
        growth_lower_bound(F, G, [0.0, 1.0])


def test_growth_lower_bound_never_exceeds_gamma():
    rng = np.random.default_rng(3)
    F, G = weighted_norm([[1.2, 0.4], [0.4, 0.9]]), affine_G()
    g = gamma_torus(F, G)
    for a in rng.normal(size=(200, 2)):
        if float(G(a)) > 0:
            assert growth_lower_bound(F, G, a) <= g.enclosure.hi
    assert g.enclosure.contains(growth_lower_bound(F, G, g.argmax), slack=1e-12)


def test_zk_embedding_examples():
    H = euclidean_norm()
    assert np.all(zk_embed(H, H).values == 0.0)
    two = zk_embed(H.scaled(2.0), H)
    assert np.allclose(two.values, math.log(2))
    F = combine([(1.0, H), (0.4, linear([0.6, 0.8]))])
    shifted = zk_embed(F.iterate(4), H).sup_distance(zk_embed(F, H) + math.log(4))
    assert shifted < 1e-12


def test_clamped_variant_kappa():
    # G = max(0.5|p| + p1, 0.1|p|) keeps G strictly positive
    G = hamiltonian({"name": "clamp", "floor": 0.1, "of": {"name": "affine", "terms": [
        {"c": 0.5, "of": {"name": "euclidean_norm"}}, {"c": 1.0, "of": {"name": "linear", "e": [1.0, 0.0]}}]}})
    F = euclidean_norm()
    k = kappa_torus(F, G)
    expected = max(math.log(1.5), math.log(1 / 0.1))
    assert k == pytest.approx(expected, abs=1e-3)


def test_three_dimensional_lattice_grid():
    F = euclidean_norm(3)
    G = linear([1.0, 2.0, 2.0])
    g = gamma_torus(F, G)
    assert g.enclosure.contains(3.0, slack=1e-9)
    assert g.refined == pytest.approx(3.0, abs=1e-6)


def test_csv_round_trip():
    F = weighted_norm([[1.0, 0.2], [0.2, 2.0]])
    back = torus.read_csv_table(F.to_csv())
    assert np.allclose(back.values, F.values, atol=1e-15)
    assert gamma_torus(back, linear([1.0, 1.0]), refine=False).value == pytest.approx(
        gamma_torus(F, linear([1.0, 1.0]), refine=False).value, abs=1e-12)
