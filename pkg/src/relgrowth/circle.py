"""Lifts of orientation-preserving circle diffeomorphisms.

Elements are words of primitive maps

    x -> x + a + sum_j b_j sin(2 pi j x + phi_j),     sum_j 2 pi j |b_j| < 1,

each possibly inverted.  Words are never refit into a single primitive.  The
cone is {f : f(x) >= x for all x}, so f >= g exactly when f(x) >= g(x)
everywhere.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .enclosure import Enclosure
from .errors import BisectionStall, InvalidParameters, RotFNearZero
from .order_core import GroupModel, OrderVerdict, Verdict

TWO_PI = 2.0 * math.pi

DEFAULT_GRID = 2048
DEFAULT_REFINED_GRID = 16384
TAU_EVAL = 1e-9
BISECTION_TOL = 1e-14
BISECTION_MAX_ITER = 200


@dataclass(frozen=True)
class Harmonic:
    j: int
    b: float
    phi: float = 0.0

    def __post_init__(self):
        if self.j < 1:
            raise InvalidParameters(f"harmonic index must be >= 1, got {self.j}")


@dataclass(frozen=True)
class Primitive:
    a: float
    harmonics: tuple[Harmonic, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "harmonics", tuple(h for h in self.harmonics if h.b != 0.0))
        if self.slope_bound >= 1.0:
            raise InvalidParameters(
                f"sum 2*pi*j*|b_j| = {self.slope_bound:.6g} must be < 1 for a monotone lift"
            )

    @property
    def slope_bound(self) -> float:
        return sum(TWO_PI * h.j * abs(h.b) for h in self.harmonics)

    @property
    def amplitude(self) -> float:
        return sum(abs(h.b) for h in self.harmonics)

    def __call__(self, x):
        y = x + self.a
        for h in self.harmonics:
            y = y + h.b * np.sin(TWO_PI * h.j * x + h.phi)
        return y

    def scalar(self, x: float) -> float:
        y = x + self.a
        for h in self.harmonics:
            y += h.b * math.sin(TWO_PI * h.j * x + h.phi)
        return y

    def inverse(self, y, tol: float = BISECTION_TOL, max_iter: int = BISECTION_MAX_ITER):
        """Solve ``self(x) = y`` by bisection on the bracket ``y - a +- amplitude``."""
        if not self.harmonics:
            return y - self.a
        y = np.asarray(y, dtype=float)
        amp = self.amplitude
        lo = y - self.a - amp
        hi = y - self.a + amp
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            below = self(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) <= tol * max(1.0, float(np.max(np.abs(y)))):
                break
        else:
            width = float(np.max(hi - lo))
            # floating point spacing can stop bisection short of tol at large |y|
            if width > 4 * np.spacing(max(1.0, float(np.max(np.abs(y))))) and width > tol:
                raise BisectionStall("inverse solve did not converge", width=width, max_iter=max_iter)
        return 0.5 * (lo + hi)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "harmonics": [{"j": h.j, "b": h.b, "phi": h.phi} for h in self.harmonics],
        }


@dataclass(frozen=True)
class Factor:
    prim: Primitive
    inv: bool = False

    def __call__(self, x):
        return self.prim.inverse(x) if self.inv else self.prim(x)

    def flipped(self) -> "Factor":
        return Factor(self.prim, not self.inv)


@dataclass(frozen=True)
class CircleLift:
    """A lift stored as a composition word; ``word[0]`` is applied first."""

    word: tuple[Factor, ...] = ()
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))
        object.__setattr__(self, "_hash", hash(self.word))

    def __hash__(self):
        return self._hash

    # construction
    @classmethod
    def translation(cls, a: float) -> "CircleLift":
        return cls((Factor(Primitive(a)),))

    @classmethod
    def arnold(cls, a: float, b: float, phi: float = 0.0, j: int = 1) -> "CircleLift":
        """x -> x + a + b sin(2 pi j x + phi)."""
        return cls((Factor(Primitive(a, (Harmonic(j, b, phi),))),))

    @classmethod
    def primitive(cls, a: float, harmonics: Iterable[tuple[int, float, float]] = ()) -> "CircleLift":
        return cls((Factor(Primitive(a, tuple(Harmonic(j, b, phi) for j, b, phi in harmonics))),))

    # group structure
    def then(self, other: "CircleLift") -> "CircleLift":
        """Apply ``self`` first, then ``other``: the composite ``other o self``."""
        return CircleLift(self.word + other.word)

    def __matmul__(self, other: "CircleLift") -> "CircleLift":
        """``f @ g`` is the composite f o g."""
        return other.then(self)

    def inverse(self) -> "CircleLift":
        return CircleLift(tuple(fac.flipped() for fac in reversed(self.word)))

    def power(self, n: int) -> "CircleLift":
        if n < 0:
            return self.inverse().power(-n)
        return CircleLift(self.word * n)

    # evaluation
    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        scalar = np.isscalar(x)
        y = np.asarray(x, dtype=float)
        for fac in self.word:
            y = fac(y)
        return float(y) if scalar else y

    @property
    def is_translation(self) -> bool:
        return all(not fac.prim.harmonics for fac in self.word)

    @property
    def shift(self) -> float:
        """Total translation amount (meaningful only for pure translations)."""
        return math.fsum(-fac.prim.a if fac.inv else fac.prim.a for fac in self.word)

    def derivative_bounds(self) -> tuple[float, float]:
        """Rigorous bounds on f' from the chain rule."""
        lo = hi = 1.0
        for fac in self.word:
            s = fac.prim.slope_bound
            if fac.inv:
                lo, hi = lo / (1 + s), hi / (1 - s)
            else:
                lo, hi = lo * (1 - s), hi * (1 + s)
        return lo, hi

    # serialisation
    def to_dict(self) -> dict:
        return {"word": [{**fac.prim.to_dict(), "inv": fac.inv} for fac in self.word]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "CircleLift":
        word = []
        for item in data["word"]:
            harmonics = tuple(
                Harmonic(int(h["j"]), float(h["b"]), float(h.get("phi", 0.0)))
                for h in item.get("harmonics", [])
            )
            word.append(Factor(Primitive(float(item["a"]), harmonics), bool(item.get("inv", False))))
        return cls(tuple(word))

    @classmethod
    def from_json(cls, text: str) -> "CircleLift":
        return cls.from_dict(json.loads(text))


IDENTITY = CircleLift()


def translation_e() -> CircleLift:
    """The generator x -> x + 1 of the loop group."""
    return CircleLift.translation(1.0)


def flow(t: float) -> CircleLift:
    """Time-t map x -> x + t of the unit-speed flow."""
    return CircleLift.translation(t)


def evaluate(f: CircleLift, x):
    return f.evaluate(x)


def _apply_scalar(f: CircleLift, x: float) -> float:
    for fac in f.word:
        x = float(fac.prim.inverse(x)) if fac.inv else fac.prim.scalar(x)
    return x


def iterate_at(f: CircleLift, n: int, x0: float = 0.0) -> float:
    """f^n(x0) for n >= 0, keeping the orbit reduced modulo 1 to preserve precision."""
    whole = math.floor(x0)
    frac = x0 - whole
    for _ in range(n):
        y = _apply_scalar(f, frac)
        fl = math.floor(y)
        whole += fl
        frac = y - fl
    return whole + frac


def rotation_number(f: CircleLift, n: int = 100_000) -> Enclosure:
    """(f^n(0) - 0)/n with the enclosure half-width 1/n from |f^n(x) - x - n Rot(f)| < 1."""
    if n < 1:
        raise InvalidParameters("iteration count must be >= 1")
    if f.is_translation:
        a = f.shift
        return Enclosure.around(a, 1.0 / n)
    value = iterate_at(f, n) / n
    return Enclosure.around(value, 1.0 / n)


def gamma_exact(f: CircleLift, g: CircleLift, n: int = 100_000) -> Enclosure:
    """gamma(f, g) = Rot(g)/Rot(f) as an interval quotient of rotation enclosures."""
    rf = rotation_number(f, n)
    rg = rotation_number(g, n)
    if rf.contains_zero():
        raise RotFNearZero("rotation enclosure of f contains 0", rot_f=rf.to_dict())
    ratio = rg / rf
    if f == g:
        return Enclosure(1.0, min(ratio.lo, 1.0), max(ratio.hi, 1.0))
    return ratio


class CircleGroup(GroupModel):
    """Order oracle and power cache for circle lifts.

    ``f^p >= g^k`` is decided on the uniform grid x_i = i/N.  Both sides are
    increasing, so on a cell [x_i, x_{i+1}]

        f^p(x) - g^k(x) >= f^p(x_i) - g^k(x_{i+1}),

    which certifies YES without any Lipschitz constant.  Cells that fail this
    bracket are subdivided to the refined resolution and then, locally and
    only where the bracket still fails, further by ``split`` per level; the
    oracle answers INCONCLUSIVE once depth, cell count or cell width run out.
    Steep iterates (slopes ~1e5 near repelling orbits of locked maps) need
    this local depth.
    """

    def __init__(
        self,
        grid: int = DEFAULT_GRID,
        refined_grid: int = DEFAULT_REFINED_GRID,
        tau: float = TAU_EVAL,
        *,
        split: int = 8,
        max_depth: int = 16,
        max_cells: int = 4096,
        min_width: float = 1e-13,
    ):
        if refined_grid % grid:
            raise InvalidParameters("refined grid must be a multiple of the base grid")
        self.grid = grid
        self.refined_grid = refined_grid
        self.tau = tau
        self.split = split
        self.max_depth = max_depth
        self.max_cells = max_cells
        self.min_width = min_width
        self.xs = np.arange(grid, dtype=float) / grid
        self._cache: dict[CircleLift, dict[int, np.ndarray]] = {}
        self._lock = threading.Lock()

    def identity(self) -> CircleLift:
        return IDENTITY

    def multiply(self, a: CircleLift, b: CircleLift) -> CircleLift:
        return a @ b

    def invert(self, a: CircleLift) -> CircleLift:
        return a.inverse()

    def power(self, a: CircleLift, n: int) -> CircleLift:
        return a.power(n)

    # power cache on the base grid
    def grid_power(self, f: CircleLift, p: int) -> np.ndarray:
        """Values of f^p at the base grid points, built incrementally from cached neighbours."""
        table = self._cache.get(f)
        if table is None:
            with self._lock:
                table = self._cache.setdefault(f, {0: self.xs})
        if p in table:
            return table[p]
        step = f if p > 0 else f.inverse()
        known = [e for e in table if (e >= 0) == (p > 0) and abs(e) < abs(p)]
        start = max(known, key=abs) if known else 0
        vals = table[start]
        for e in range(abs(start) + 1, abs(p) + 1):
            vals = step.evaluate(vals)
            # identical entries may be inserted concurrently; setdefault keeps the first
            vals = table.setdefault(e if p > 0 else -e, vals)
        return vals

    def cache_size(self) -> int:
        return sum(len(t) for t in self._cache.values())

    def compare_powers(self, f: CircleLift, p: int, g: CircleLift, k: int) -> OrderVerdict:
        if f == g and p == k:
            return OrderVerdict(Verdict.YES, margin=0.0, resolution=0, details={"exact": True})
        if f.is_translation and g.is_translation:
            d = p * f.shift - k * g.shift
            if d >= -self.tau:
                return OrderVerdict(Verdict.YES, margin=d, resolution=0, details={"exact": True})
            return OrderVerdict(Verdict.NO, witness=0.0, margin=d, resolution=0, details={"exact": True})
        A = self.grid_power(f, p)
        B = self.grid_power(g, k)
        return self._decide(A, B, lambda x: _power_eval(f, p, x), lambda x: _power_eval(g, k, x))

    def dominates(self, f: CircleLift, g: CircleLift) -> OrderVerdict:
        return self.compare_powers(f, 1, g, 1)

    def _decide(self, A: np.ndarray, B: np.ndarray, fa, fb) -> OrderVerdict:
        N = self.grid
        d = A - B
        i = int(np.argmin(d))
        if d[i] < -self.tau:
            return OrderVerdict(Verdict.NO, witness=float(self.xs[i]), margin=float(d[i]), resolution=N)
        # periodic closure: f^p(1) = f^p(0) + 1
        A_ext = np.append(A, A[0] + 1.0)
        B_ext = np.append(B, B[0] + 1.0)
        lower = A_ext[:-1] - B_ext[1:]
        bad = np.flatnonzero(lower < -self.tau)
        if bad.size == 0:
            return OrderVerdict(Verdict.YES, margin=float(lower.min()), resolution=N)

        factor = self.refined_grid // N
        if factor <= 1:
            return self._inconclusive(float(lower.min()), self.xs[bad], N)
        x_ext = np.append(self.xs, 1.0)
        return self._refine(
            x_ext[bad], x_ext[bad + 1], A_ext[bad], A_ext[bad + 1], B_ext[bad], B_ext[bad + 1],
            fa, fb, factor, float(np.delete(lower, bad).min(initial=np.inf)),
        )

    def _refine(self, xl, xr, Al, Ar, Bl, Br, fa, fb, factor: int, margin: float) -> OrderVerdict:
        """Subdivide only the cells whose bracket fails, until they certify, fail or hit the floor."""
        depth = 0
        while True:
            t = np.arange(1, factor) / factor
            sub = xl[:, None] + (xr - xl)[:, None] * t[None, :]
            As = fa(sub.ravel()).reshape(sub.shape)
            Bs = fb(sub.ravel()).reshape(sub.shape)
            ds = As - Bs
            j = int(np.argmin(ds))
            resolution = int(round(1.0 / float(np.min(xr - xl) / factor)))
            if ds.flat[j] < -self.tau:
                return OrderVerdict(Verdict.NO, witness=float(sub.flat[j]), margin=float(ds.flat[j]),
                                    resolution=resolution)
            X = np.column_stack([xl, sub, xr])
            A = np.column_stack([Al, As, Ar])
            B = np.column_stack([Bl, Bs, Br])
            low = A[:, :-1] - B[:, 1:]
            ok = low >= -self.tau
            if ok.any():
                margin = min(margin, float(low[ok].min()))
            if ok.all():
                return OrderVerdict(Verdict.YES, margin=margin, resolution=resolution,
                                    details={"refinement_depth": depth + 1})
            bi, bj = np.nonzero(~ok)
            xl, xr = X[bi, bj], X[bi, bj + 1]
            Al, Ar, Bl, Br = A[bi, bj], A[bi, bj + 1], B[bi, bj], B[bi, bj + 1]
            depth += 1
            factor = self.split
            if depth > self.max_depth or len(xl) > self.max_cells or float(np.min(xr - xl)) < self.min_width:
                return self._inconclusive(float(low.min()), xl, resolution)

    def _inconclusive(self, lower: float, cells, resolution) -> OrderVerdict:
        return OrderVerdict(
            Verdict.INCONCLUSIVE,
            margin=lower,
            resolution=resolution,
            details={
                "unresolved_cells": int(len(cells)),
                "first_cell": float(cells[0]) if len(cells) else None,
                "tau": self.tau,
            },
        )


def _power_eval(f: CircleLift, p: int, x: np.ndarray) -> np.ndarray:
    step = f if p >= 0 else f.inverse()
    y = np.asarray(x, dtype=float)
    for _ in range(abs(p)):
        y = step.evaluate(y)
    return y


_DEFAULT_MODEL: CircleGroup | None = None


def default_model() -> CircleGroup:
    global _DEFAULT_MODEL
    if _DEFAULT_MODEL is None:
        _DEFAULT_MODEL = CircleGroup()
    return _DEFAULT_MODEL


def dominates(f: CircleLift, g: CircleLift, model: CircleGroup | None = None) -> OrderVerdict:
    """Order verdict for f >= g on the default grids."""
    return (model or default_model()).dominates(f, g)


def arnold_catalogue() -> list[CircleLift]:
    """Ten Arnold-family lifts x + a + b sin(2 pi x + phi) with a > |b| (so f(x) > x)."""
    params: Sequence[tuple[float, float, float]] = (
        (0.30, 0.05, 0.0),
        (0.5, 0.1, 0.0),
        (0.123, 0.08, 0.3),
        (0.71, 0.12, 1.1),
        (0.25, 0.02, 0.0),
        (0.618, 0.15, 2.0),
        (1.37, 0.1, 0.7),
        (0.41, 0.07, -0.4),
        (0.9, 0.13, 0.2),
        (0.19, 0.05, 1.7),
    )
    return [CircleLift.arnold(a, b, phi) for a, b, phi in params]
