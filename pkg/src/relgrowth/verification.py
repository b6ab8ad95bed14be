"""The acceptance suite shared by ``relgrowth verify`` and the test-suite.

Each criterion returns a JSON-ready dict with ``id``, ``title``, ``pass``
and the numbers it compared.  Timings are logged (stderr) and only their
pass flags enter the report, so reports stay byte-identical across runs.
"""
from __future__ import annotations

import json
import logging
import math
import time
from contextlib import contextmanager
from typing import Callable

import numpy as np

from . import circle, torus
from .circle import CircleGroup, CircleLift, arnold_catalogue, flow, gamma_exact, rotation_number, translation_e
from .config import VerifyConfig
from .order_core import relative_growth
from .stable_norm import (
    conformal_cosine,
    constant_metric,
    dual_lower_bound,
    flat_norm,
    identity_metric,
    stable_norm_primal,
    verify_geodesic_growth,
)

logger = logging.getLogger(__name__)

FLAT_CLASSES = ((1, 0), (1, 1), (3, 4))

TITLES = {
    1: "rotation number identity Rot(f) * gamma(f, e) = 1",
    2: "circle growth equals Rot(g)/Rot(f); kappa is flat",
    3: "finite product bound gamma_k(f,g) gamma_k(g,f) >= k^2",
    4: "torus growth reproduces analytic maxima",
    5: "shape value properties",
    6: "growth lower bound G(a)/F(a) <= gamma_torus",
    7: "kappa is the sup distance of log embeddings; iterates are isometric",
    8: "flat stable norm: primal, dual and gamma_torus agree",
    9: "conformal stable norm and minimal action",
    10: "geodesic growth bound gamma(f, e) >= ||e||",
    11: "circle flow: gamma(e, flow(t)) = t and flow(p/q)^q = e^p",
    12: "determinism of the verification report",
}


@contextmanager
def _timer(label: str, out: dict):
    t0 = time.perf_counter()
    yield
    out["seconds"] = time.perf_counter() - t0
    logger.info("%s: %.2f s", label, out["seconds"])


def _result(cid: int, passed: bool, **details) -> dict:
    return {"id": cid, "title": TITLES[cid], "pass": bool(passed), **details}


def _pairs() -> list[tuple[int, int]]:
    return [(i, (i + 1) % 10) for i in range(10)]


class Suite:
    """Runs criteria and shares the expensive intermediate results between them."""

    def __init__(self, cfg: VerifyConfig | None = None, seed: int = 0, jobs: int = 1):
        self.cfg = cfg or VerifyConfig()
        self.seed = seed
        self.jobs = jobs
        self.model = CircleGroup()
        self._pair_growth: dict | None = None
        self._flat: dict | None = None
        self._conformal: dict | None = None

    # ---------------------------------------------------------- circle

    def c1(self) -> dict:
        cfg, e = self.cfg, translation_e()
        rows, t = [], {}
        with _timer("criterion 1", t):
            for i, f in enumerate(arnold_catalogue()):
                g = relative_growth(self.model, f, e, cfg.rot_K)
                rot = rotation_number(f, cfg.rot_n)
                prod = g.trend * rot.value
                rows.append({"lift": i, "trend": g.trend, "rot": rot.to_dict(), "product": prod,
                             "pass": abs(prod - 1.0) <= cfg.rot_tol})
        runtime_ok = t["seconds"] < cfg.rot_seconds
        return _result(1, all(r["pass"] for r in rows) and runtime_ok, tolerance=cfg.rot_tol,
                       runtime_ok=runtime_ok, rows=rows)

    def _growth_pairs(self) -> dict:
        if self._pair_growth is None:
            cat = arnold_catalogue()
            K = max(self.cfg.rot_K, self.cfg.product_K)
            out = {}
            for i, j in _pairs():
                out[(i, j)] = (relative_growth(self.model, cat[i], cat[j], K),
                               relative_growth(self.model, cat[j], cat[i], K))
            self._pair_growth = out
        return self._pair_growth

    def c2(self) -> dict:
        cfg, cat = self.cfg, arnold_catalogue()
        rows = []
        for (i, j), (fwd, bwd) in self._growth_pairs().items():
            exact = gamma_exact(cat[i], cat[j], cfg.rot_n)
            trend = fwd.gammas[cfg.rot_K - 1] / cfg.rot_K
            back = bwd.gammas[cfg.rot_K - 1] / cfg.rot_K
            kap = max(math.log(trend), math.log(back))
            rf, rg = rotation_number(cat[i], cfg.rot_n).value, rotation_number(cat[j], cfg.rot_n).value
            flat = abs(math.log(rf) - math.log(rg))
            ok = abs(trend - exact.value) <= cfg.pair_tol and abs(kap - flat) <= cfg.kappa_tol
            rows.append({"pair": [i, j], "trend": trend, "exact": exact.to_dict(),
                         "kappa": kap, "log_rot_gap": flat, "pass": ok})
        return _result(2, all(r["pass"] for r in rows), tolerance=cfg.pair_tol,
                       kappa_tolerance=cfg.kappa_tol, rows=rows)

    def c3(self) -> dict:
        K = self.cfg.product_K
        rows = []
        for (i, j), (fwd, bwd) in self._growth_pairs().items():
            bad = [k for k in range(1, K + 1) if fwd.gamma(k) * bwd.gamma(k) < k * k]
            rows.append({"pair": [i, j], "violations": bad, "pass": not bad})
        return _result(3, all(r["pass"] for r in rows), K=K, rows=rows)

    def c11(self) -> dict:
        cfg, e = self.cfg, translation_e()
        rows = []
        for t in cfg.flow_times:
            g = relative_growth(self.model, e, flow(t), cfg.flow_K)
            rows.append({"t": t, "trend": g.trend, "gap": g.trend - t, "pass": abs(g.trend - t) <= cfg.flow_tol})
        xs = self.model.xs
        for p, q in ((1, 4), (37, 100), (1, 2), (3, 7)):
            lhs = flow(p / q).power(q)(xs)
            err = float(np.max(np.abs(lhs - (xs + p))))
            rows.append({"p": p, "q": q, "max_error": err, "pass": err <= self.model.tau})
        return _result(11, all(r["pass"] for r in rows), tolerance=cfg.flow_tol, tau=self.model.tau, rows=rows)

    # ---------------------------------------------------------- torus

    def c4(self) -> dict:
        cfg = self.cfg
        N = torus.sphere_grid(2)
        F = torus.euclidean_norm()
        cases = [
            ("scaling", torus.euclidean_norm().scaled(2.0), 2.0),
            ("linear", torus.linear([1.0, 0.0]), 1.0),
            ("affine", torus.combine([(0.5, torus.euclidean_norm()), (1.0, torus.linear([1.0, 0.0]))]), 1.5),
        ]
        rows, t = [], {}
        with _timer("criterion 4", t):
            for name, G, expected in cases:
                g = torus.gamma_torus(F, G)
                ok = g.enclosure.contains(expected, slack=1e-12) and g.enclosure.width < cfg.torus_width
                rows.append({"case": name, "expected": expected, "gamma": g.to_dict(), "pass": ok})
        runtime_ok = t["seconds"] < cfg.torus_seconds
        return _result(4, all(r["pass"] for r in rows) and runtime_ok, N=len(N), runtime_ok=runtime_ok,
                       width_limit=cfg.torus_width, rows=rows)

    def _random_hamiltonian(self, rng: np.random.Generator, positive: bool) -> torus.HomogeneousHamiltonian:
        kind = rng.integers(0, 3)
        if kind == 0:
            return torus.euclidean_norm().scaled(float(rng.uniform(0.5, 2.0)))
        if kind == 1:
            L = rng.normal(size=(2, 2))
            A = L @ L.T + 0.3 * np.eye(2)
            return torus.weighted_norm(A)
        c = float(rng.uniform(0.0, 0.8 if positive else 2.0))
        e = rng.normal(size=2)
        e /= np.linalg.norm(e)
        return torus.combine([(1.0, torus.euclidean_norm()), (c, torus.linear(e))])

    def c5(self) -> dict:
        rng = np.random.default_rng([self.seed, 5])
        rows = []
        for inst in range(self.cfg.shape_instances):
            F = self._random_hamiltonian(rng, positive=False)
            G = self._random_hamiltonian(rng, positive=False)
            a = rng.normal(size=2)
            c = float(rng.uniform(0.1, 5.0))
            k = int(rng.integers(1, 6))
            rep = torus.check_shape_properties(F, G, a, c, k)
            rows.append({"instance": inst, "c": c, "k": k, "checked": len(rep.records),
                         "violations": rep.violations, "pass": rep.ok})
        return _result(5, all(r["pass"] for r in rows), rows=rows)

    def c6(self) -> dict:
        rng = np.random.default_rng([self.seed, 6])
        rows = []
        for pair in range(3):
            F = self._random_hamiltonian(rng, positive=True)
            G = self._random_hamiltonian(rng, positive=True)
            g = torus.gamma_torus(F, G)
            worst, tried = -math.inf, 0
            below = True
            while tried < self.cfg.directions:
                a = rng.normal(size=2)
                if float(G(a)) <= 0:
                    continue
                lb = torus.growth_lower_bound(F, G, a)
                worst = max(worst, lb)
                below &= lb <= g.enclosure.hi
                tried += 1
            at_max = torus.growth_lower_bound(F, G, g.argmax)
            attained = g.enclosure.contains(at_max, slack=1e-12)
            rows.append({"pair": pair, "gamma": g.to_dict(), "max_bound": worst, "bound_at_argmax": at_max,
                         "directions": tried, "pass": bool(below and attained)})
        return _result(6, all(r["pass"] for r in rows), rows=rows)

    def c7(self) -> dict:
        rng = np.random.default_rng([self.seed, 7])
        H_ref = torus.euclidean_norm()
        rows = []
        for pair in range(self.cfg.kappa_pairs):
            F = self._random_hamiltonian(rng, positive=True)
            G = self._random_hamiltonian(rng, positive=True)
            kap = torus.kappa_torus(F, G)
            dist = torus.zk_embed(F, H_ref).sup_distance(torus.zk_embed(G, H_ref))
            m = int(rng.integers(2, 6))
            g1 = torus.gamma_torus(F, G, refine=False).value
            gm = torus.gamma_torus(F.iterate(m), G.iterate(m), refine=False).value
            ok = abs(kap - dist) <= self.cfg.kappa_match and gm == g1
            rows.append({"pair": pair, "kappa": kap, "sup_log_gap": dist, "m": m,
                         "gamma": g1, "gamma_iterated": gm, "pass": ok})
        return _result(7, all(r["pass"] for r in rows), tolerance=self.cfg.kappa_match, rows=rows)

    # ---------------------------------------------------------- stable norm

    def _flat_reports(self) -> dict:
        if self._flat is None:
            cfg = self.cfg
            out, t = {}, {}
            with _timer("flat stable norms", t):
                for name, metric in (("identity", identity_metric()), ("diag(4,1)", constant_metric([[4, 0], [0, 1]]))):
                    for e in FLAT_CLASSES:
                        rep = verify_geodesic_growth(metric, e, cfg.eps, cfg.flat_K, cfg.flat_R, rel_tol=cfg.flat_tol,
                                           jobs=self.jobs)
                        out[(name, e)] = (rep, flat_norm(metric, e))
            self._flat = {"reports": out, "seconds": t["seconds"]}
        return self._flat

    def c8(self) -> dict:
        cfg = self.cfg
        flat = self._flat_reports()
        rows = []
        for (name, e), (rep, exact) in flat["reports"].items():
            primal = rep.notes["primal"]["envelope"]
            dual = rep.notes["dual"]
            lower = float(np.dot(dual["a"], e)) / dual["upper"]
            gam = rep.notes["gamma"]["value"]
            vals = [primal, lower, gam]
            spread = (max(vals) - min(vals)) / min(vals)
            rows.append({"metric": name, "e": list(e), "primal": primal, "dual": lower, "gamma": gam,
                         "exact": exact, "spread": spread, "pass": spread <= cfg.flat_tol})
        runtime_ok = flat["seconds"] < cfg.flat_seconds
        return _result(8, all(r["pass"] for r in rows) and runtime_ok, tolerance=cfg.flat_tol,
                       R=cfg.flat_R, K=cfg.flat_K, runtime_ok=runtime_ok, rows=rows)

    def _conformal_data(self) -> dict:
        if self._conformal is None:
            cfg = self.cfg
            metric = conformal_cosine(0.3, 0)
            primal = stable_norm_primal(metric, (0, 1), cfg.conformal_K, cfg.conformal_R, jobs=self.jobs)
            lower, dual = dual_lower_bound(metric, (0, 1), cfg.conformal_dual_R)
            self._conformal = {"metric": metric, "primal": primal, "lower": lower, "dual": dual}
        return self._conformal

    def c9(self) -> dict:
        cfg = self.cfg
        d = self._conformal_data()
        primal = d["primal"]
        lo, hi = cfg.conformal_window
        beta = 0.5 * primal.value**2
        beta_ok = 0.5 * lo**2 <= beta <= 0.5 * hi**2
        ok = lo <= primal.value <= hi and d["lower"] >= cfg.conformal_dual_min and beta_ok
        return _result(9, ok, primal=primal.to_dict(), dual_lower=d["lower"], dual=d["dual"].to_dict(),
                       beta=beta, beta_window=[0.5 * lo**2, 0.5 * hi**2], window=[lo, hi],
                       dual_min=cfg.conformal_dual_min)

    def c10(self) -> dict:
        cfg = self.cfg
        rows = []
        for (name, e), (rep, _) in self._flat_reports()["reports"].items():
            recs = {r["name"]: r for r in rep.records}
            rows.append({"branch": "flat", "metric": name, "e": list(e),
                         "gamma": recs["gamma_vs_primal"]["lhs"], "primal": recs["gamma_vs_primal"]["rhs"],
                         "pass": rep.ok})
        d = self._conformal_data()
        rep = verify_geodesic_growth(d["metric"], (0, 1), cfg.eps, cfg.conformal_K, cfg.conformal_R,
                           dual_R=cfg.conformal_dual_R, primal=d["primal"])
        rows.append({"branch": "non_flat", "metric": "conformal_cosine", "e": [0, 1],
                     "bound": rep.notes["gamma_lower_bound"], "primal": d["primal"].value,
                     "primal_slack": d["primal"].slack, "records": rep.records, "pass": rep.ok})
        return _result(10, all(r["pass"] for r in rows), rows=rows)

    # ---------------------------------------------------------- determinism

    def c12(self) -> dict:
        """Recompute the seeded criteria with fresh state and compare serialisations."""
        first = [_dumps(self.run_one(c)) for c in (5, 6, 7)]
        again = Suite(self.cfg, self.seed, self.jobs)
        second = [_dumps(again.run_one(c)) for c in (5, 6, 7)]
        return _result(12, first == second, compared=[5, 6, 7], identical=[a == b for a, b in zip(first, second)])

    def run_one(self, cid: int) -> dict:
        fn: Callable[[], dict] = getattr(self, f"c{cid}")
        try:
            return fn()
        except Exception as exc:  # a crash is a failed criterion, not a crashed report
            logger.exception("criterion %d raised", cid)
            return _result(cid, False, error=f"{type(exc).__name__}: {exc}")

    def run(self, criteria=None) -> dict:
        ids = list(criteria or self.cfg.criteria)
        results = [self.run_one(c) for c in ids]
        return {
            "suite": "acceptance",
            "seed": self.seed,
            "ok": all(r["pass"] for r in results),
            "criteria": results,
        }


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def run_suite(cfg: VerifyConfig | None = None, seed: int = 0, jobs: int = 1, criteria=None) -> dict:
    return Suite(cfg, seed, jobs).run(criteria)


def report_json(report: dict) -> str:
    return _dumps(report) + "\n"
