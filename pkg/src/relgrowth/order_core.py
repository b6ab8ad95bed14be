"""Generic engine for groups ordered by a normal cone.

A model supplies the group operations and an order oracle.  The engine turns
oracle answers into the integer sequence

    gamma_k(f, g) = min { p in Z : f^p >= g^k },

its limit estimates, the kappa pseudo-distance, and verification reports for
the cone axioms and the growth inequalities.
"""
from __future__ import annotations

import enum
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

from .errors import (
    DominantWitnessNotFound,
    InvalidParameters,
    NegativeUnderTolerance,
    OrderInconclusive,
)

logger = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    YES = "YES"
    NO = "NO"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class OrderVerdict:
    """Answer of an order oracle to the query ``f >= g``.

    ``witness`` is a point where ``f < g`` (NO verdicts only); ``margin`` is the
    certified lower bound of ``f - g`` for YES, the most negative sampled value
    for NO; ``resolution`` is the finest grid the oracle had to use.
    """

    verdict: Verdict
    witness: float | None = None
    margin: float = math.nan
    resolution: int = 0
    details: dict = field(default_factory=dict, compare=False)

    @property
    def yes(self) -> bool:
        return self.verdict is Verdict.YES

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "witness": self.witness,
            "margin": self.margin,
            "resolution": self.resolution,
            **self.details,
        }


class GroupModel(ABC):
    """A group with a normal cone, seen through an order oracle.

    Subclasses must make ``dominates`` a deterministic function of its
    arguments.  ``compare_powers`` exists so models can cache powers; the
    default builds the powers through ``power``.
    """

    @abstractmethod
    def identity(self) -> Any: ...

    @abstractmethod
    def multiply(self, a, b) -> Any: ...

    @abstractmethod
    def invert(self, a) -> Any: ...

    @abstractmethod
    def dominates(self, a, b) -> OrderVerdict: ...

    def key(self, a) -> Hashable:
        return a

    def power(self, a, n: int):
        if n < 0:
            return self.power(self.invert(a), -n)
        result = self.identity()
        base = a
        while n:
            if n & 1:
                result = self.multiply(result, base)
            base = self.multiply(base, base)
            n >>= 1
        return result

    def conjugate(self, h, a):
        """Return ``h a h^{-1}``."""
        return self.multiply(self.multiply(h, a), self.invert(h))

    def compare_powers(self, f, p: int, g, k: int) -> OrderVerdict:
        """Oracle answer for ``f^p >= g^k``."""
        return self.dominates(self.power(f, p), self.power(g, k))

    def in_cone(self, a) -> OrderVerdict:
        return self.dominates(a, self.identity())


def _require_resolved(verdict: OrderVerdict, what: str) -> bool:
    if verdict.verdict is Verdict.INCONCLUSIVE:
        raise OrderInconclusive(f"oracle could not resolve {what}", query=what, **verdict.to_dict())
    return verdict.yes


def dominant_witness(model: GroupModel, f, g, *, sign: int = -1, q_max: int = 1000) -> int:
    """Smallest ``q >= 0`` with ``f^q >= g^sign`` (``sign`` is -1 or +1).

    With ``sign=-1`` this is the bound q of the finiteness argument: every
    admissible p in gamma_k satisfies p >= -k q.
    """
    if sign not in (-1, 1):
        raise InvalidParameters("sign must be -1 or +1")
    # Exponential then binary search; p -> [f^p >= h] is monotone because f >= 1.
    lo, hi = -1, 0
    while hi <= q_max:
        if _require_resolved(model.compare_powers(f, hi, g, sign), f"f^{hi} >= g^{sign}"):
            break
        lo, hi = hi, max(1, 2 * hi)
    else:
        # the last doubling may have jumped past q_max
        if lo < q_max and _require_resolved(model.compare_powers(f, q_max, g, sign), f"f^{q_max} >= g^{sign}"):
            hi = q_max
        else:
            raise DominantWitnessNotFound(
                f"no q <= {q_max} with f^q >= g^{sign}", q_max=q_max, sign=sign
            )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _require_resolved(model.compare_powers(f, mid, g, sign), f"f^{mid} >= g^{sign}"):
            hi = mid
        else:
            lo = mid
    return hi


def _least_power(model: GroupModel, f, g, k: int, lo: int, hi: int) -> int:
    """Least p in [lo, hi] with f^p >= g^k, assuming it holds at hi."""
    if not _require_resolved(model.compare_powers(f, hi, g, k), f"f^{hi} >= g^{k}"):
        raise OrderInconclusive(
            "upper bracket failed; the oracle contradicts product closure",
            query=f"f^{hi} >= g^{k}",
        )
    while lo < hi:
        mid = (lo + hi) // 2
        if _require_resolved(model.compare_powers(f, mid, g, k), f"f^{mid} >= g^{k}"):
            hi = mid
        else:
            lo = mid + 1
    return hi


def gamma_k(
    model: GroupModel,
    f,
    g,
    k: int,
    *,
    q_max: int = 1000,
    witnesses: tuple[int, int] | None = None,
) -> int:
    """``min { p : f^p >= g^k }`` for a dominant f.

    The search is bracketed by ``[-k q, k q']`` with ``f^q >= g^{-1}`` and
    ``f^{q'} >= g``, then bisected.
    """
    if k < 1:
        raise InvalidParameters("k must be a positive integer")
    q, q_up = witnesses if witnesses is not None else _witnesses(model, f, g, q_max)
    return _least_power(model, f, g, k, -k * q, k * q_up)


def _witnesses(model: GroupModel, f, g, q_max: int) -> tuple[int, int]:
    q = dominant_witness(model, f, g, sign=-1, q_max=q_max)
    q_up = dominant_witness(model, f, g, sign=1, q_max=q_max)
    return q, q_up


@dataclass(frozen=True)
class GrowthEstimate:
    """Finite-horizon data for the relative growth gamma(f, g)."""

    gammas: tuple[int, ...]
    q_used: int

    @property
    def K(self) -> int:
        return len(self.gammas)

    @property
    def trend(self) -> float:
        """Point estimate gamma_K / K."""
        return self.gammas[-1] / self.K

    @property
    def upper_envelope(self) -> float:
        """min_k gamma_k / k; never below the limit when the oracle gives no false YES."""
        return min(gk / k for k, gk in enumerate(self.gammas, start=1))

    def envelope_at(self, K: int) -> float:
        return min(gk / k for k, gk in enumerate(self.gammas[:K], start=1))

    def gamma(self, k: int) -> int:
        return self.gammas[k - 1]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "q_used": self.q_used,
            "trend": self.trend,
            "upper_envelope": self.upper_envelope,
            "gammas": list(self.gammas),
        }


def relative_growth(model: GroupModel, f, g, K: int, *, q_max: int = 1000) -> GrowthEstimate:
    """gamma_k(f, g) for k = 1..K with trend and certified upper envelope."""
    if K < 1:
        raise InvalidParameters("horizon K must be >= 1")
    q, q_up = _witnesses(model, f, g, q_max)
    gammas: list[int] = []
    for k in range(1, K + 1):
        hi = k * q_up
        if gammas:
            # f^{g_{k-1}} >= g^{k-1} and f^{g_1} >= g combine by product closure
            hi = min(hi, gammas[-1] + gammas[0])
        gammas.append(_least_power(model, f, g, k, -k * q, hi))
    return GrowthEstimate(tuple(gammas), q)


def subadditivity_violations(seq: Sequence[float], slack: float = 0.0) -> list[tuple[int, int]]:
    """Pairs (m, n) with seq[m+n] > seq[m] + seq[n] + slack; ``seq[0]`` is the k = 1 term."""
    bad = []
    K = len(seq)
    for m in range(1, K):
        for n in range(m, K - m + 1):
            if seq[m + n - 1] > seq[m - 1] + seq[n - 1] + slack:
                bad.append((m, n))
    return bad


@dataclass(frozen=True)
class KappaEstimate:
    value: float
    certified_upper: float
    forward: GrowthEstimate
    backward: GrowthEstimate

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "certified_upper": self.certified_upper,
            "forward": self.forward.to_dict(),
            "backward": self.backward.to_dict(),
        }


def kappa(model: GroupModel, f, g, K: int, *, tol: float = 0.05, q_max: int = 1000) -> KappaEstimate:
    """max(log gamma(f,g), log gamma(g,f)) from trends, plus the envelope-based upper value."""
    fwd = relative_growth(model, f, g, K, q_max=q_max)
    bwd = relative_growth(model, g, f, K, q_max=q_max)
    if min(fwd.trend, bwd.trend, fwd.upper_envelope, bwd.upper_envelope) <= 0:
        raise InvalidParameters("kappa needs positive relative growth in both directions")
    value = max(math.log(fwd.trend), math.log(bwd.trend))
    certified = max(math.log(fwd.upper_envelope), math.log(bwd.upper_envelope))
    if value < -tol:
        raise NegativeUnderTolerance(
            f"kappa estimate {value:.6g} below -{tol}", value=value, tol=tol
        )
    return KappaEstimate(value, certified, fwd, bwd)


@dataclass
class Report:
    """Flat list of checked instances; serialises to JSON records."""

    title: str
    records: list[dict] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add(self, name: str, lhs, rhs, passed: bool | None, k: int | None = None, **extra) -> bool | None:
        rec = {"name": name, "k": k, "lhs": lhs, "rhs": rhs, "pass": passed}
        rec.update(extra)
        self.records.append(rec)
        return passed

    @property
    def violations(self) -> list[dict]:
        return [r for r in self.records if r["pass"] is False]

    @property
    def unresolved(self) -> list[dict]:
        return [r for r in self.records if r["pass"] is None]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"title": self.title, "ok": self.ok, "records": self.records, "notes": self.notes}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def check_cone_axioms(model: GroupModel, samples: Sequence) -> Report:
    """Test 1 in C, closure of C under products, and conjugation stability on samples."""
    report = Report("cone_axioms")
    one = model.identity()
    v = model.in_cone(one)
    report.add("identity_in_cone", v.verdict.value, Verdict.YES.value,
               None if v.verdict is Verdict.INCONCLUSIVE else v.yes)

    membership = []
    for s in samples:
        membership.append(model.in_cone(s).verdict)
    report.notes["membership"] = [m.value for m in membership]
    members = [i for i, m in enumerate(membership) if m is Verdict.YES]
    report.notes["skipped_non_members"] = [i for i, m in enumerate(membership) if m is not Verdict.YES]

    for i in members:
        for j in members:
            v = model.in_cone(model.multiply(samples[i], samples[j]))
            report.add("product_closure", v.verdict.value, Verdict.YES.value,
                       None if v.verdict is Verdict.INCONCLUSIVE else v.yes, pair=[i, j])
    for i in members:
        for j, h in enumerate(samples):
            v = model.in_cone(model.conjugate(h, samples[i]))
            report.add("conjugation_stability", v.verdict.value, Verdict.YES.value,
                       None if v.verdict is Verdict.INCONCLUSIVE else v.yes, pair=[i, j])
    return report


def check_growth_inequalities(
    model: GroupModel,
    f,
    g,
    h,
    e1,
    e2,
    K: int,
    *,
    tol: float = 0.05,
    q_max: int = 1000,
) -> Report:
    """Finite-k checks of the growth inequalities for dominants f, g, h and central e1, e2.

    * gamma_k(f,g) * gamma_k(g,f) >= k^2 (integer arithmetic),
    * subadditivity and the -k q floor of every computed sequence,
    * gamma_{k^2}(f,h) <= gamma_k(f,g) gamma_k(g,h) whenever k^2 <= K and both factors are >= 0,
    * trend(f,h) <= trend(f,g) trend(g,h) + tol,
    * gamma_k(f, e1 e2) <= gamma_k(f, e1) + gamma_k(f, e2).
    """
    report = Report("growth_inequalities")
    est = {
        "fg": relative_growth(model, f, g, K, q_max=q_max),
        "gf": relative_growth(model, g, f, K, q_max=q_max),
        "fh": relative_growth(model, f, h, K, q_max=q_max),
        "gh": relative_growth(model, g, h, K, q_max=q_max),
        "fe1": relative_growth(model, f, e1, K, q_max=q_max),
        "fe2": relative_growth(model, f, e2, K, q_max=q_max),
        "fe12": relative_growth(model, f, model.multiply(e1, e2), K, q_max=q_max),
    }
    fg, gf = est["fg"], est["gf"]
    for k in range(1, K + 1):
        lhs = fg.gamma(k) * gf.gamma(k)
        report.add("product_bound", lhs, k * k, lhs >= k * k, k=k)

    for label, e in est.items():
        floor_bad = [k for k in range(1, K + 1) if e.gamma(k) < -k * e.q_used]
        report.add("finite_floor", len(floor_bad), 0, not floor_bad, k=K, pair=label, failures=floor_bad)
        bad = subadditivity_violations(e.gammas)
        report.add("subadditivity", len(bad), 0, not bad, k=K, pair=label, failures=bad[:10])

    for k in range(1, math.isqrt(K) + 1):
        a, b = est["fg"].gamma(k), est["gh"].gamma(k)
        if a < 0 or b < 0:
            continue
        lhs = est["fh"].gamma(k * k)
        report.add("triangle_finite", lhs, a * b, lhs <= a * b, k=k)

    lhs = est["fh"].trend
    rhs = est["fg"].trend * est["gh"].trend
    report.add("triangle_trend", lhs, rhs, lhs <= rhs + tol, k=K, tol=tol)

    for k in range(1, K + 1):
        lhs = est["fe12"].gamma(k)
        rhs = est["fe1"].gamma(k) + est["fe2"].gamma(k)
        report.add("central_subadditivity", lhs, rhs, lhs <= rhs, k=k)

    report.notes["estimates"] = {key: e.to_dict() for key, e in est.items()}
    return report
