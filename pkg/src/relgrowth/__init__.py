"""Relative growth of elements in partially ordered groups.

Three concrete models share one order-theoretic core:

* ``circle``: lifts of circle diffeomorphisms ordered pointwise;
* ``torus``: autonomous contact Hamiltonians F(p) on T*T^n;
* ``stable_norm``: stable norm and minimal action of periodic metrics.
"""
from .circle import CircleGroup, CircleLift, flow, gamma_exact, rotation_number
from .enclosure import Enclosure
from .errors import RelGrowthError
from .order_core import GroupModel, OrderVerdict, Verdict, gamma_k, kappa, relative_growth
from .stable_norm import (
    TorusMetric,
    mather_beta,
    stable_norm_dual,
    stable_norm_primal,
    verify_geodesic_growth,
)
from .torus import HomogeneousHamiltonian, gamma_torus, growth_lower_bound, shape_values, zk_embed

__version__ = "0.1.0"

__all__ = [
    "CircleGroup",
    "CircleLift",
    "Enclosure",
    "GroupModel",
    "HomogeneousHamiltonian",
    "OrderVerdict",
    "RelGrowthError",
    "TorusMetric",
    "Verdict",
    "flow",
    "gamma_exact",
    "gamma_k",
    "gamma_torus",
    "growth_lower_bound",
    "kappa",
    "mather_beta",
    "relative_growth",
    "rotation_number",
    "shape_values",
    "stable_norm_dual",
    "stable_norm_primal",
    "verify_geodesic_growth",
    "zk_embed",
]
