"""Autonomous degree-1 homogeneous contact Hamiltonians F(p) on T*T^n.

A Hamiltonian is stored by its values on a discretised unit sphere, optionally
with a closed form.  Positive scalar factors and iterate multiplicities are
kept apart from the sampled table so that f -> f^m is exact:
gamma(mF, mG) reuses the same table and a multiplicity ratio of exactly 1.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import reduce
from typing import Callable

import numpy as np
from scipy import optimize

from .enclosure import Enclosure
from .errors import (
    DimensionMismatch,
    FNotPositive,
    HypothesisFailed,
    InvalidParameters,
    ZeroClass,
)
from .order_core import Report

DEFAULT_CIRCLE_POINTS = 4096
DEFAULT_LATTICE_M = 24

Closed = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Directions on S^{n-1} plus a covering radius ``h`` (geodesic)."""

    dim: int
    directions: np.ndarray
    h: float
    kind: str
    size: int

    @classmethod
    def circle(cls, N: int = DEFAULT_CIRCLE_POINTS) -> "SphereGrid":
        theta = 2.0 * np.pi * np.arange(N) / N
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        return cls(2, dirs, math.pi / N, "uniform_angles", N)

    @classmethod
    def lattice(cls, dim: int, m: int = DEFAULT_LATTICE_M) -> "SphereGrid":
        """Normalised primitive integer vectors of sup-norm <= m."""
        axes = [np.arange(-m, m + 1)] * dim
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        pts = pts[np.any(pts != 0, axis=1)]
        g = reduce(np.gcd, [np.abs(pts[:, i]) for i in range(dim)])
        pts = pts[g == 1].astype(float)
        dirs = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        # rounding m u/|u|_inf to the lattice moves it by <= sqrt(n)/2 at distance >= m
        h = math.asin(min(1.0, math.sqrt(dim) / (2.0 * m)))
        return cls(dim, dirs, h, "lattice", m)

    @classmethod
    def default(cls, dim: int) -> "SphereGrid":
        return cls.circle() if dim == 2 else cls.lattice(dim)

    def same_as(self, other: "SphereGrid") -> bool:
        return (self.dim, self.kind, self.size) == (other.dim, other.kind, other.size)

    def __len__(self) -> int:
        return len(self.directions)


_GRID_CACHE: dict[tuple, SphereGrid] = {}


def sphere_grid(dim: int, size: int | None = None) -> SphereGrid:
    key = (dim, size)
    if key not in _GRID_CACHE:
        if dim == 2:
            _GRID_CACHE[key] = SphereGrid.circle(size or DEFAULT_CIRCLE_POINTS)
        elif dim >= 3:
            _GRID_CACHE[key] = SphereGrid.lattice(dim, size or DEFAULT_LATTICE_M)
        else:
            raise InvalidParameters("sphere grids need dimension >= 2")
    return _GRID_CACHE[key]


@dataclass(frozen=True, eq=False)
class HomogeneousHamiltonian:
    """F(p), degree-1 homogeneous, time- and q-independent.

    Values are ``coeff * mult * table``; ``table_lip`` bounds the geodesic
    Lipschitz constant of the table on the sphere.
    """

    grid: SphereGrid
    table: np.ndarray
    table_lip: float
    closed: Closed | None = None
    coeff: float = 1.0
    mult: int = 1
    spec: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def scale(self) -> float:
        return self.coeff * self.mult

    @property
    def values(self) -> np.ndarray:
        return self.table * self.coeff * self.mult

    @property
    def lipschitz(self) -> float:
        return self.table_lip * abs(self.coeff) * self.mult

    def __call__(self, p) -> float | np.ndarray:
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        P = np.atleast_2d(p)
        if P.shape[1] != self.dim:
            raise DimensionMismatch(f"expected vectors of length {self.dim}, got {P.shape[1]}")
        if self.closed is not None:
            base = self.closed(P)
        else:
            base = self._interpolate(P)
        out = base * self.coeff * self.mult
        return float(out[0]) if single else out

    def _interpolate(self, P: np.ndarray) -> np.ndarray:
        if self.grid.kind != "uniform_angles":
            raise InvalidParameters("table-only Hamiltonians can be evaluated off-grid only for n = 2")
        r = np.linalg.norm(P, axis=1)
        theta = np.mod(np.arctan2(P[:, 1], P[:, 0]), 2 * np.pi)
        N = len(self.table)
        s = theta * N / (2 * np.pi)
        i0 = np.floor(s).astype(int) % N
        w = s - np.floor(s)
        vals = (1 - w) * self.table[i0] + w * self.table[(i0 + 1) % N]
        return r * vals

    # group operations in the autonomous class
    def scaled(self, c: float) -> "HomogeneousHamiltonian":
        return replace(self, coeff=self.coeff * c, spec={"name": "scale", "c": c, "of": self.spec})

    def iterate(self, m: int) -> "HomogeneousHamiltonian":
        """Hamiltonian mF of the m-th iterate f^m."""
        if m < 1:
            raise InvalidParameters("iterate needs m >= 1")
        return replace(self, mult=self.mult * m, spec={"name": "iterate", "m": m, "of": self.spec})

    def inverse(self) -> "HomogeneousHamiltonian":
        """Hamiltonian -F of f^{-1}."""
        return replace(self, coeff=-self.coeff, spec={"name": "inverse", "of": self.spec})

    def conjugate_by_shift(self, shift) -> "HomogeneousHamiltonian":
        """Hamiltonian of h f h^{-1} for the torus shift h: q -> q + shift.

        The shift acts trivially on p, so F o h^{-1} = F.
        """
        shift = np.asarray(shift, dtype=float)
        if shift.shape != (self.dim,):
            raise DimensionMismatch("shift must live in the same torus")
        return replace(self, spec={"name": "conjugate_by_shift", "shift": shift.tolist(), "of": self.spec})

    # positivity
    def grid_min(self) -> float:
        return float(self.values.min())

    def certified_min(self) -> float:
        return self.grid_min() - self.lipschitz * self.grid.h

    @property
    def strictly_positive(self) -> bool:
        return self.certified_min() > 0.0

    # serialisation
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"p{i + 1}" for i in range(self.dim)] + ["value"])
        for d, v in zip(self.grid.directions, self.values):
            w.writerow([repr(float(x)) for x in d] + [repr(float(v))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "grid": {"kind": self.grid.kind, "size": self.grid.size, "h": self.grid.h},
            "lipschitz": self.lipschitz,
            "spec": self.spec,
            "directions": self.grid.directions.tolist(),
            "values": self.values.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _norm(P):
    return np.linalg.norm(P, axis=1)


def _build(spec: dict, grid: SphereGrid) -> HomogeneousHamiltonian:
    name = spec.get("name")
    n = grid.dim
    if name == "euclidean_norm":
        closed, lip = _norm, 0.0
    elif name == "zero":
        closed, lip = (lambda P: np.zeros(len(P))), 0.0
    elif name == "linear":
        e = np.asarray(spec["e"], dtype=float)
        if e.shape != (n,):
            raise DimensionMismatch(f"linear form needs {n} components")
        closed, lip = (lambda P, e=e: P @ e), float(np.linalg.norm(e))
    elif name == "weighted_norm":
        A = np.asarray(spec["matrix"], dtype=float)
        if A.shape != (n, n):
            raise DimensionMismatch(f"weighted_norm needs an {n}x{n} matrix")
        if not np.allclose(A, A.T):
            raise InvalidParameters("weighted_norm matrix must be symmetric")
        ev = np.linalg.eigvalsh(A)
        if ev.min() <= 0:
            raise InvalidParameters("weighted_norm matrix must be positive definite")
        closed = lambda P, A=A: np.sqrt(np.einsum("ij,jk,ik->i", P, A, P))
        lip = float(ev.max() / math.sqrt(ev.min()))
    elif name == "scale":
        inner = _build(spec["of"], grid)
        return replace(inner, coeff=inner.coeff * float(spec["c"]), spec=spec)
    elif name == "affine":
        return replace(combine([(float(t["c"]), _build(t["of"], grid)) for t in spec["terms"]]), spec=spec)
    elif name == "clamp":
        # max(H(p), floor |p|): keeps a Hamiltonian strictly positive
        inner = _build(spec["of"], grid)
        floor = float(spec["floor"])
        closed = None
        if inner.closed is not None:
            closed = lambda P, H=inner, fl=floor: np.maximum(H(P), fl * _norm(P))
        table = np.maximum(inner.values, floor)
        return HomogeneousHamiltonian(grid, table, inner.lipschitz, closed, spec=spec)
    else:
        raise InvalidParameters(f"unknown Hamiltonian {name!r}")
    return HomogeneousHamiltonian(grid, closed(grid.directions), lip, closed, spec=spec)


def combine(terms) -> HomogeneousHamiltonian:
    """Linear combination sum c_i H_i of Hamiltonians on one grid."""
    terms = list(terms)
    grid = terms[0][1].grid
    for _, H in terms:
        if not H.grid.same_as(grid):
            raise DimensionMismatch("Hamiltonians sampled on different sphere grids")
    table = sum(c * H.values for c, H in terms)
    lip = sum(abs(c) * H.lipschitz for c, H in terms)
    closed = None
    if all(H.closed is not None for _, H in terms):
        closed = lambda P, terms=terms: sum(c * H(P) for c, H in terms)
    spec = {"name": "affine", "terms": [{"c": c, "of": H.spec} for c, H in terms]}
    return HomogeneousHamiltonian(grid, np.asarray(table, dtype=float), lip, closed, spec=spec)


def hamiltonian(spec: dict, dim: int = 2, grid: SphereGrid | None = None) -> HomogeneousHamiltonian:
    """Build a catalogue Hamiltonian from ``{"name": ..., ...}``.

    Names: euclidean_norm, zero, linear(e), weighted_norm(matrix), scale(c, of),
    affine(terms=[{c, of}, ...]), clamp(of, floor).
    """
    grid = grid or sphere_grid(dim)
    if grid.dim != dim:
        raise DimensionMismatch("grid dimension differs from requested dimension")
    if "q" in spec or "t" in spec or spec.get("time_dependent") or spec.get("q_dependent"):
        raise InvalidParameters("only autonomous p-only Hamiltonians are supported")
    return _build(spec, grid)


def euclidean_norm(dim: int = 2, grid: SphereGrid | None = None) -> HomogeneousHamiltonian:
    return hamiltonian({"name": "euclidean_norm"}, dim, grid)


def linear(e, grid: SphereGrid | None = None) -> HomogeneousHamiltonian:
    e = list(map(float, e))
    return hamiltonian({"name": "linear", "e": e}, len(e), grid)


def weighted_norm(matrix, grid: SphereGrid | None = None) -> HomogeneousHamiltonian:
    A = np.asarray(matrix, dtype=float)
    return hamiltonian({"name": "weighted_norm", "matrix": A.tolist()}, A.shape[0], grid)


def zero(dim: int = 2, grid: SphereGrid | None = None) -> HomogeneousHamiltonian:
    return hamiltonian({"name": "zero"}, dim, grid)


def from_table(directions, values, lipschitz: float | None = None) -> HomogeneousHamiltonian:
    """Table-only Hamiltonian on a uniform circle grid (directions must match its angles)."""
    directions = np.asarray(directions, dtype=float)
    values = np.asarray(values, dtype=float)
    if directions.shape[1] != 2:
        raise InvalidParameters("tables are supported for n = 2")
    theta = np.mod(np.arctan2(directions[:, 1], directions[:, 0]), 2 * np.pi)
    order = np.argsort(theta)
    values = values[order]
    grid = sphere_grid(2, len(values))
    if not np.allclose(grid.directions, directions[order], atol=1e-9):
        raise InvalidParameters("table directions are not a uniform angular grid")
    if lipschitz is None:
        lipschitz = float(np.max(np.abs(np.diff(np.append(values, values[0])))) / (2 * np.pi / len(values)))
    return HomogeneousHamiltonian(grid, values, lipschitz, None, spec={"name": "table"})


def read_csv_table(text: str) -> HomogeneousHamiltonian:
    rows = list(csv.reader(io.StringIO(text)))
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    return from_table(data[:, :-1], data[:, -1])


def _check_pair(F: HomogeneousHamiltonian, G: HomogeneousHamiltonian):
    if F.dim != G.dim:
        raise DimensionMismatch(f"dimensions {F.dim} and {G.dim} differ")
    if not F.grid.same_as(G.grid):
        raise DimensionMismatch("Hamiltonians sampled on different sphere grids")


def _require_positive(F: HomogeneousHamiltonian, label: str = "F"):
    if not F.strictly_positive:
        raise FNotPositive(
            f"{label} is not certified strictly positive on the sphere",
            grid_min=F.grid_min(),
            lipschitz_margin=F.lipschitz * F.grid.h,
        )


@dataclass(frozen=True)
class TorusGrowth:
    """gamma(f, g) = max G/F with grid enclosure and maximising direction."""

    enclosure: Enclosure
    argmax: np.ndarray
    refined: float | None = None

    @property
    def value(self) -> float:
        return self.enclosure.value

    def to_dict(self) -> dict:
        return {
            **self.enclosure.to_dict(),
            "enclosure_width": self.enclosure.width,
            "argmax": self.argmax.tolist(),
            "refined": self.refined,
        }


def _scale_ratio(F: HomogeneousHamiltonian, G: HomogeneousHamiltonian) -> float:
    # the multiplicity ratio is rational and exactly 1 for equal iterates
    return (G.coeff / F.coeff) * float(Fraction(G.mult, F.mult))


def gamma_torus(F: HomogeneousHamiltonian, G: HomogeneousHamiltonian, *, refine: bool = True) -> TorusGrowth:
    """Relative growth of the time-one maps of F and G: max over the sphere of G/F.

    Enclosure: grid max <= true max <= grid max + (L_G/min F + max|G| L_F/min F^2) h,
    with min F replaced by its certified lower bound.
    """
    _check_pair(F, G)
    _require_positive(F)
    if G.values.max() <= 0:
        raise HypothesisFailed("G must be positive somewhere on the sphere")
    s = _scale_ratio(F, G)
    ratio = G.table / F.table
    i = int(np.argmax(ratio) if s >= 0 else np.argmin(ratio))
    value = float(ratio[i] * s)
    fmin = F.certified_min()
    width = (G.lipschitz / fmin + float(np.abs(G.values).max()) * F.lipschitz / fmin**2) * F.grid.h
    enc = Enclosure(value, value, value + width)
    argmax = F.grid.directions[i]
    refined = None
    if refine and F.closed is not None and G.closed is not None:
        refined = _refine_max(F, G, argmax, F.grid.h)
    return TorusGrowth(enc, argmax, refined)


def _refine_max(F, G, start: np.ndarray, h: float) -> float:
    """Local maximisation of G/F from closed forms, seeded at the grid argmax."""
    if F.dim == 2:
        th0 = math.atan2(start[1], start[0])
        fun = lambda th: -float(G(np.array([math.cos(th), math.sin(th)])) / F(np.array([math.cos(th), math.sin(th)])))
        res = optimize.minimize_scalar(fun, bounds=(th0 - 2 * h, th0 + 2 * h), method="bounded",
                                       options={"xatol": 1e-12})
        return max(-res.fun, -fun(th0))
    fun = lambda p: -float(G(p / np.linalg.norm(p)) / F(p / np.linalg.norm(p)))
    res = optimize.minimize(fun, start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13})
    return max(-res.fun, -fun(start))


def kappa_torus(F: HomogeneousHamiltonian, G: HomogeneousHamiltonian) -> float:
    """max(log gamma(F,G), log gamma(G,F)) on the shared grid."""
    _require_positive(G, "G")
    return max(math.log(gamma_torus(F, G, refine=False).value), math.log(gamma_torus(G, F, refine=False).value))


@dataclass(frozen=True)
class ShapeValues:
    a: tuple[float, ...]
    r_minus: float
    r_plus: float

    def __post_init__(self):
        if self.r_plus < self.r_minus:
            raise ValueError("r_plus must dominate r_minus")

    def to_dict(self) -> dict:
        return {"a": list(self.a), "r_minus": self.r_minus, "r_plus": self.r_plus}


def _cohomology(a, dim: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (dim,):
        raise DimensionMismatch(f"class must have {dim} components")
    if not np.any(a):
        raise ZeroClass("cohomology class must be non-zero")
    return a


def shape_values(a, F: HomogeneousHamiltonian) -> ShapeValues:
    """r_-(a, f) = r_+(a, f) = F(a) for the split domains {r + F(p) >< 0}."""
    a = _cohomology(a, F.dim)
    v = float(F(a))
    return ShapeValues(tuple(a.tolist()), v, v)


def in_shape_plus(a, b: float, F: HomogeneousHamiltonian) -> bool:
    """(a, b) in Shape{r + F >= 0}: the split torus {p = a, r = b} lies in the domain."""
    return b + float(F(_cohomology(a, F.dim))) >= 0.0


def in_shape_minus(a, b: float, F: HomogeneousHamiltonian) -> bool:
    return b + float(F(_cohomology(a, F.dim))) <= 0.0


def _certified_geq(F: HomogeneousHamiltonian, G: HomogeneousHamiltonian) -> bool:
    diff = F.values - G.values
    return float(diff.min()) - (F.lipschitz + G.lipschitz) * F.grid.h >= 0.0


def check_shape_properties(
    F: HomogeneousHamiltonian,
    G: HomogeneousHamiltonian,
    a,
    c: float,
    k: int,
    *,
    shift=None,
    rtol: float = 1e-12,
) -> Report:
    """Order, normalization, monotonicity, iterate, inverse, homogeneity and conjugation checks on r_+-."""
    _check_pair(F, G)
    a = _cohomology(a, F.dim)
    if c <= 0 or k < 1:
        raise InvalidParameters("need c > 0 and k >= 1")
    report = Report("shape_properties")
    close = lambda x, y: math.isclose(x, y, rel_tol=rtol, abs_tol=rtol)
    sv = shape_values(a, F)

    for delta in (1e-3, 0.1, 1.0):
        report.add("shape_plus_above", -sv.r_minus + delta, -sv.r_minus,
                   in_shape_plus(a, -sv.r_minus + delta, F), delta=delta)
        report.add("shape_minus_below", -sv.r_plus - delta, -sv.r_plus,
                   in_shape_minus(a, -sv.r_plus - delta, F), delta=delta)

    report.add("order", sv.r_plus, sv.r_minus, sv.r_plus >= sv.r_minus)

    one = shape_values(a, zero(F.dim, F.grid))
    report.add("normalization", [one.r_minus, one.r_plus], 0.0, one.r_minus == 0.0 and one.r_plus == 0.0)

    bigger = combine([(1.0, F), (0.1, euclidean_norm(F.dim, F.grid))])
    pairs = [("given", F, G), ("F+0.1|p|", bigger, F)]
    for label, A, B in pairs:
        if _certified_geq(A, B):
            sa, sb = shape_values(a, A), shape_values(a, B)
            report.add("monotonicity", [sa.r_minus, sa.r_plus], [sb.r_minus, sb.r_plus],
                       sa.r_minus >= sb.r_minus and sa.r_plus >= sb.r_plus, pair=label)
        elif _certified_geq(B, A):
            sa, sb = shape_values(a, B), shape_values(a, A)
            report.add("monotonicity", [sa.r_minus, sa.r_plus], [sb.r_minus, sb.r_plus],
                       sa.r_minus >= sb.r_minus and sa.r_plus >= sb.r_plus, pair=label + "(reversed)")
        else:
            report.notes.setdefault("incomparable", []).append(label)

    sk = shape_values(a, F.iterate(k))
    report.add("iterate_minus", sk.r_minus, k * sv.r_minus, sk.r_minus >= k * sv.r_minus, k=k)
    report.add("iterate_plus", sk.r_plus, k * sv.r_plus, sk.r_plus <= k * sv.r_plus, k=k)

    inv = shape_values(a, F.inverse())
    report.add("inverse", inv.r_plus, -sv.r_minus, inv.r_plus == -sv.r_minus)

    sc = shape_values(c * a, F)
    report.add("homogeneity", [sc.r_minus, sc.r_plus], [c * sv.r_minus, c * sv.r_plus],
               close(sc.r_minus, c * sv.r_minus) and close(sc.r_plus, c * sv.r_plus), c=c)

    shift = np.full(F.dim, 0.37) if shift is None else shift
    conj = shape_values(a, F.conjugate_by_shift(shift))
    report.add("conjugation", [conj.r_minus, conj.r_plus], [sv.r_minus, sv.r_plus],
               conj.r_minus == sv.r_minus and conj.r_plus == sv.r_plus)
    return report


def growth_lower_bound(F: HomogeneousHamiltonian, G: HomogeneousHamiltonian, a) -> float:
    """r_-(a, g) / r_+(a, f) = G(a)/F(a); requires G(a) > 0."""
    _check_pair(F, G)
    a = _cohomology(a, F.dim)
    fa, ga = float(F(a)), float(G(a))
    if fa <= 0:
        raise FNotPositive("F(a) must be positive", F_a=fa)
    if ga <= 0:
        raise HypothesisFailed("r_-(a, g) = G(a) must be positive", G_a=ga)
    return ga / fa


@dataclass(frozen=True, eq=False)
class SphereFunction:
    grid: SphereGrid
    values: np.ndarray

    def sup_distance(self, other: "SphereFunction") -> float:
        if not self.grid.same_as(other.grid):
            raise DimensionMismatch("sphere functions on different grids")
        return float(np.max(np.abs(self.values - other.values)))

    def __add__(self, c: float) -> "SphereFunction":
        return SphereFunction(self.grid, self.values + c)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"p{i + 1}" for i in range(self.grid.dim)] + ["value"])
        for d, v in zip(self.grid.directions, self.values):
            w.writerow([repr(float(x)) for x in d] + [repr(float(v))])
        return buf.getvalue()


def zk_embed(F: HomogeneousHamiltonian, H_ref: HomogeneousHamiltonian) -> SphereFunction:
    """log(F / H_ref) on the sphere grid; an isometry onto (C(S^{n-1}), max |u|)."""
    _check_pair(F, H_ref)
    _require_positive(F)
    _require_positive(H_ref, "H_ref")
    return SphereFunction(F.grid, np.log(F.values / H_ref.values))
