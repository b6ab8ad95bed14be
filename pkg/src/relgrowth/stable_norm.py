"""Stable norm and minimal action of periodic metrics on T^n.

Two independent routes to ||e||:

* primal: minimal length l(ke) of grid loops in the class ke, from Dijkstra
  on the lifted stencil graph; l(ke)/k is subadditive, so min_k l(ke)/k is
  the estimate;
* dual: minimise max_x |a + df|_{g*} over piecewise-linear periodic
  potentials; any potential gives an upper bound for ||a||*, hence the lower
  bound <a, e> / ||a||* <= ||e||.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import csgraph

from .errors import DimensionMismatch, InvalidParameters, ResolutionTooCoarse, ZeroClass
from .order_core import Report, subadditivity_violations

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True, eq=False)
class TorusMetric:
    """Periodic Riemannian metric on R^n / Z^n.

    ``kind`` is one of ``constant``, ``conformal`` or ``table``.  Conformal
    metrics are lambda(q)^2 Id with a closed-form lambda; tables hold full
    matrices on an R^n node grid and are interpolated multilinearly.
    """

    dim: int
    kind: str
    matrix: np.ndarray | None = None
    lam: Callable[[np.ndarray], np.ndarray] | None = None
    lam_lipschitz: float = 0.0
    lam_min: float = 1.0
    table: np.ndarray | None = None
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "constant":
            m = np.asarray(self.matrix, dtype=float)
            _check_spd(m[None])
            object.__setattr__(self, "matrix", m)
        elif self.kind == "table":
            t = np.asarray(self.table, dtype=float)
            if t.shape[-2:] != (self.dim, self.dim) or t.ndim != self.dim + 2:
                raise DimensionMismatch("metric table must have shape (R,)*n + (n, n)")
            _check_spd(t.reshape(-1, self.dim, self.dim))
            object.__setattr__(self, "table", t)
        elif self.kind == "conformal":
            if self.lam_min <= 0:
                raise InvalidParameters("conformal factor must be bounded below by a positive number")
        else:
            raise InvalidParameters(f"unknown metric kind {self.kind!r}")

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def tensor(self, Q: np.ndarray) -> np.ndarray:
        """Metric matrices at points Q (M x n)."""
        Q = np.atleast_2d(Q)
        if self.kind == "constant":
            return np.broadcast_to(self.matrix, (len(Q), self.dim, self.dim))
        if self.kind == "conformal":
            lam = self.lam(Q)
            return (lam**2)[:, None, None] * np.eye(self.dim)[None]
        return _interp_table(self.table, Q)

    def length(self, Q: np.ndarray, D: np.ndarray) -> np.ndarray:
        """|D|_{g(Q)} row-wise."""
        if self.kind == "conformal":
            return self.lam(Q) * np.linalg.norm(D, axis=-1)
        G = self.tensor(Q)
        return np.sqrt(np.einsum("...i,...ij,...j->...", D, G, D))

    def inverse_tensor(self, Q: np.ndarray) -> np.ndarray:
        if self.kind == "conformal":
            lam = self.lam(np.atleast_2d(Q))
            return (lam**-2)[:, None, None] * np.eye(self.dim)[None]
        return np.linalg.inv(self.tensor(Q))

    def dual_lipschitz(self) -> float:
        """Bound L with | |alpha|_{g*(x)} - |alpha|_{g*(y)} | <= L |alpha| |x - y|."""
        if self.kind == "constant":
            return 0.0
        if self.kind == "conformal":
            return self.lam_lipschitz / self.lam_min**2
        # table: finite-difference estimate of |d(g^{-1})| over the node grid
        R = self.table.shape[0]
        inv = np.linalg.inv(self.table)
        jumps = max(
            float(np.max(np.linalg.norm(np.roll(inv, -1, axis=ax) - inv, ord=2, axis=(-2, -1))))
            for ax in range(self.dim)
        )
        mu_min = float(np.min(np.linalg.eigvalsh(inv)))
        return jumps * R / (2.0 * math.sqrt(mu_min))

    def averaged_tensor(self, samples: int = 32) -> np.ndarray:
        axes = [np.arange(samples) / samples] * self.dim
        Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return self.tensor(Q).mean(axis=0)

    def to_dict(self) -> dict:
        return dict(self.spec) if self.spec else {"kind": self.kind}


def _check_spd(mats: np.ndarray):
    if not np.allclose(mats, np.swapaxes(mats, -1, -2)):
        raise InvalidParameters("metric must be symmetric")
    if np.min(np.linalg.eigvalsh(mats)) <= 0:
        raise InvalidParameters("metric must be positive definite at every node")


def _interp_table(table: np.ndarray, Q: np.ndarray) -> np.ndarray:
    n = Q.shape[1]
    R = table.shape[0]
    s = np.mod(Q, 1.0) * R
    i0 = np.floor(s).astype(int)
    w = s - i0
    out = np.zeros((len(Q), n, n))
    for corner in itertools.product((0, 1), repeat=n):
        c = np.asarray(corner)
        idx = tuple(((i0[:, d] + c[d]) % R) for d in range(n))
        weight = np.prod(np.where(c[None, :] == 1, w, 1 - w), axis=1)
        out += weight[:, None, None] * table[idx]
    return out


def identity_metric(dim: int = 2) -> TorusMetric:
    return TorusMetric(dim, "constant", matrix=np.eye(dim), spec={"name": "identity", "dim": dim})


def constant_metric(matrix) -> TorusMetric:
    m = np.asarray(matrix, dtype=float)
    return TorusMetric(m.shape[0], "constant", matrix=m, spec={"name": "constant", "matrix": m.tolist()})


def conformal_cosine(amplitude: float = 0.3, axis: int = 0, dim: int = 2) -> TorusMetric:
    """lambda(q) = 1 + amplitude cos(2 pi q_axis)."""
    if not 0 <= amplitude < 1:
        raise InvalidParameters("amplitude must lie in [0, 1)")
    if not 0 <= axis < dim:
        raise InvalidParameters("axis out of range")
    lam = lambda Q, A=amplitude, ax=axis: 1.0 + A * np.cos(2 * np.pi * np.atleast_2d(Q)[:, ax])
    return TorusMetric(
        dim, "conformal", lam=lam, lam_lipschitz=2 * np.pi * amplitude, lam_min=1.0 - amplitude,
        spec={"name": "conformal_cosine", "amplitude": amplitude, "axis": axis, "dim": dim},
    )


def metric_from_csv(text: str) -> TorusMetric:
    """Columns q1..qn, g11, g12, ..., gnn (row-major), one row per node i/R."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    header, body = rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
    n = sum(1 for h in header if h.startswith("q"))
    if body.shape[1] != n + n * n:
        raise DimensionMismatch(f"expected {n + n * n} columns for a {n}-dimensional metric table")
    R = round(len(body) ** (1.0 / n))
    if R**n != len(body):
        raise InvalidParameters("table must have R^n rows")
    idx = np.rint(body[:, :n] * R).astype(int) % R
    table = np.zeros((R,) * n + (n, n))
    table[tuple(idx.T)] = body[:, n:].reshape(-1, n, n)
    return TorusMetric(n, "table", table=table, spec={"name": "table", "R": R})


def metric_to_csv(metric: TorusMetric, R: int) -> str:
    n = metric.dim
    axes = [np.arange(R) / R] * n
    Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    G = metric.tensor(Q).reshape(len(Q), n * n)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"q{i + 1}" for i in range(n)] + [f"g{i + 1}{j + 1}" for i in range(n) for j in range(n)])
    for q, g in zip(Q, G):
        w.writerow([repr(float(x)) for x in q] + [repr(float(x)) for x in g])
    return buf.getvalue()


def metric_from_spec(spec: dict) -> TorusMetric:
    name = spec.get("name")
    if name == "identity":
        return identity_metric(int(spec.get("dim", 2)))
    if name == "constant":
        return constant_metric(spec["matrix"])
    if name == "conformal_cosine":
        return conformal_cosine(float(spec.get("amplitude", 0.3)), int(spec.get("axis", 0)), int(spec.get("dim", 2)))
    if name == "table":
        with open(spec["path"], encoding="utf-8") as fh:
            return metric_from_csv(fh.read())
    raise InvalidParameters(f"unknown metric {name!r}")


# ---------------------------------------------------------------- primal route


def stencil(dim: int, radius: int | None = None) -> np.ndarray:
    """Primitive integer vectors of sup-norm <= radius (default 3 for n = 2, 1 otherwise)."""
    if radius is None:
        radius = 3 if dim == 2 else 1
    pts = np.array(list(itertools.product(range(-radius, radius + 1), repeat=dim)))
    pts = pts[np.any(pts != 0, axis=1)]
    g = reduce(np.gcd, [np.abs(pts[:, i]) for i in range(dim)])
    return pts[g == 1]


def stencil_anisotropy(dim: int, radius: int | None = None) -> float:
    """Worst relative excess of a stencil path over a straight Euclidean segment (n = 2)."""
    if dim != 2:
        # adjacent directions of the 26-neighbour stencil are at most 45 degrees apart
        return 1.0 / math.cos(math.pi / 8) - 1.0
    S = stencil(2, radius)
    ang = np.sort(np.mod(np.arctan2(S[:, 1], S[:, 0]), 2 * np.pi))
    gaps = np.diff(np.append(ang, ang[0] + 2 * np.pi))
    return float(1.0 / np.cos(gaps.max() / 2) - 1.0)


def _class(e, dim: int | None = None) -> np.ndarray:
    e = np.asarray(e)
    if dim is not None and e.shape != (dim,):
        raise DimensionMismatch(f"class must have {dim} components")
    if not np.any(e):
        raise ZeroClass("homology class must be non-zero")
    if not np.all(np.asarray(e, dtype=float) == np.rint(np.asarray(e, dtype=float))):
        raise InvalidParameters("homology class must be integral")
    return np.rint(np.asarray(e, dtype=float)).astype(int)


@dataclass
class _TubeGraph:
    nodes: np.ndarray        # window coordinates relative to the source, (V, n)
    indptr: np.ndarray
    indices: np.ndarray
    tail: np.ndarray         # tail node of each stored edge, (E,)
    offset_id: np.ndarray    # stencil index of each stored edge, (E,)
    targets: np.ndarray      # node index of k R e for k = 1..K


def _tube_graph(e: np.ndarray, R: int, K: int, S: np.ndarray, half_width: float) -> _TubeGraph:
    n = len(e)
    v = e * R
    L = K * float(np.linalg.norm(v))
    u = v / np.linalg.norm(v)
    w = half_width
    lo = np.floor(np.minimum(0, K * v) - w).astype(int) - 1
    hi = np.ceil(np.maximum(0, K * v) + w).astype(int) + 1
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    box = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    t = box @ u
    perp = np.linalg.norm(box - t[:, None] * u[None, :], axis=1)
    keep = (t >= -w) & (t <= L + w) & (perp <= w)
    nodes = box[keep]
    shape = hi - lo + 1
    lookup = -np.ones(int(np.prod(shape)), dtype=np.int64)
    flat = np.ravel_multi_index(tuple((nodes - lo).T), shape)
    lookup[flat] = np.arange(len(nodes))

    tails, heads, oids = [], [], []
    for si, s in enumerate(S):
        nb = nodes + s
        inside = np.all((nb >= lo) & (nb <= hi), axis=1)
        idx = -np.ones(len(nodes), dtype=np.int64)
        idx[inside] = lookup[np.ravel_multi_index(tuple((nb[inside] - lo).T), shape)]
        ok = idx >= 0
        tails.append(np.flatnonzero(ok))
        heads.append(idx[ok])
        oids.append(np.full(ok.sum(), si))
    tail = np.concatenate(tails)
    head = np.concatenate(heads)
    oid = np.concatenate(oids)
    order = np.lexsort((head, tail))
    tail, head, oid = tail[order], head[order], oid[order]
    indptr = np.searchsorted(tail, np.arange(len(nodes) + 1))
    targets = []
    for k in range(1, K + 1):
        key = np.ravel_multi_index(tuple(k * v - lo), shape)
        targets.append(lookup[key])
    return _TubeGraph(nodes, indptr, head, tail, oid, np.asarray(targets))


def _edge_weights(metric: TorusMetric, R: int, S: np.ndarray) -> np.ndarray:
    """Weights W[s, node] of the step node -> node + s, for every torus node."""
    n = metric.dim
    axes = [np.arange(R)] * n
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n).astype(float)
    W = np.empty((len(S), len(X)))
    for si, s in enumerate(S):
        D = np.broadcast_to(s / R, X.shape)
        W[si] = metric.length((X + 0.5 * s) / R, D)
    return W


_WORKER_STATE = None


def _run_source(state, x0: np.ndarray) -> np.ndarray:
    graph, Wflat, row_offset, strides, R, src_index = state
    V = len(graph.nodes)
    node_torus = (np.mod(graph.nodes + x0, R) * strides).sum(axis=1)
    data = Wflat[row_offset + node_torus[graph.tail]]
    G = sparse.csr_matrix((data, graph.indices, graph.indptr), shape=(V, V))
    dist = csgraph.dijkstra(G, directed=True, indices=src_index)
    return dist[graph.targets]


def _run_sources(chunk: np.ndarray) -> list[np.ndarray]:
    return [_run_source(_WORKER_STATE, x0) for x0 in chunk]


def loop_lengths(
    metric: TorusMetric,
    e,
    R: int = 64,
    K: int = 1,
    *,
    radius: int | None = None,
    tube: float = 0.5,
    jobs: int = 1,
) -> np.ndarray:
    """l(ke) for k = 1..K: shortest grid loops in the class ke, minimised over start nodes."""
    e = _class(e, metric.dim)
    if R < 4 or K < 1:
        raise InvalidParameters("need R >= 4 and K >= 1")
    S = stencil(metric.dim, radius)
    band = int(np.max(np.abs(S)))
    half_width = max(tube * R, band + 2.0)
    graph = _tube_graph(e, R, K, S, half_width)
    W = _edge_weights(metric, R, S)
    n = metric.dim
    strides = R ** np.arange(n - 1, -1, -1)

    if metric.is_constant:
        sources = np.zeros((1, n), dtype=int)
    else:
        i = int(np.argmax(np.abs(e)))
        axes = [np.arange(R)] * n
        axes[i] = np.arange(band)
        sources = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    src_index = int(np.flatnonzero(np.all(graph.nodes == 0, axis=1))[0])
    state = (graph, W.ravel(), graph.offset_id.astype(np.int64) * W.shape[1], strides, R, src_index)

    if jobs > 1 and len(sources) > 1:
        global _WORKER_STATE
        _WORKER_STATE = state
        chunks = np.array_split(sources, jobs)
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            results = [r for part in pool.map(_run_sources, chunks) for r in part]
        _WORKER_STATE = None
    else:
        results = [_run_source(state, x0) for x0 in sources]
    best = np.min(np.vstack(results), axis=0)
    if not np.all(np.isfinite(best)):
        raise ResolutionTooCoarse("target unreachable inside the search tube", R=R, tube=tube)
    return best


def loop_length_min(metric: TorusMetric, e, R: int = 64, **kw) -> float:
    """Minimal length of a grid loop in the class e at resolution R."""
    return float(loop_lengths(metric, e, R, 1, **kw)[0])


@dataclass(frozen=True)
class NormEstimate:
    e: tuple[int, ...]
    lengths: tuple[float, ...]
    R: int
    stencil_size: int
    anisotropy: float
    dual_lower: float | None = None

    @property
    def K(self) -> int:
        return len(self.lengths)

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(l / k for k, l in enumerate(self.lengths, start=1))

    @property
    def envelope(self) -> float:
        return min(self.ratios)

    @property
    def value(self) -> float:
        return self.envelope

    @property
    def slack(self) -> float:
        """Declared discretisation slack of the primal route."""
        return self.envelope * self.anisotropy

    def subadditivity_violations(self, tol: float = 1e-9) -> list[tuple[int, int]]:
        return subadditivity_violations(self.lengths, tol)

    def to_dict(self) -> dict:
        return {
            "e": list(self.e),
            "R": self.R,
            "K": self.K,
            "stencil_size": self.stencil_size,
            "lengths": list(self.lengths),
            "ratios": list(self.ratios),
            "envelope": self.envelope,
            "slack": self.slack,
            "dual_lower": self.dual_lower,
        }


def stable_norm_primal(
    metric: TorusMetric, e, K: int = 4, R: int = 64, *, radius: int | None = None, tube: float = 0.5, jobs: int = 1
) -> NormEstimate:
    """min_k l(ke)/k over k <= K."""
    e = _class(e, metric.dim)
    lengths = loop_lengths(metric, e, R, K, radius=radius, tube=tube, jobs=jobs)
    S = stencil(metric.dim, radius)
    return NormEstimate(tuple(int(x) for x in e), tuple(float(x) for x in lengths), R, len(S),
                        stencil_anisotropy(metric.dim, radius))


def mather_beta(metric: TorusMetric, e, K: int = 4, R: int = 64, **kw) -> float:
    """Minimal action beta(e) = ||e||^2 / 2 from the primal norm."""
    return 0.5 * stable_norm_primal(metric, e, K, R, **kw).value ** 2


# ---------------------------------------------------------------- dual route


@dataclass(frozen=True)
class DualEstimate:
    """Upper bound for ||a||* from an explicit piecewise-linear closed form a + df."""

    a: tuple[float, ...]
    value: float
    slack: float
    initial: float
    status: str
    R: int
    iterations: int

    @property
    def upper(self) -> float:
        return self.value + self.slack

    def lower_bound_for(self, e) -> float:
        """<a, e> / ||a||*_upper <= ||e||."""
        return float(np.dot(self.a, e)) / self.upper

    def to_dict(self) -> dict:
        return {
            "a": list(self.a),
            "value": self.value,
            "slack": self.slack,
            "upper": self.upper,
            "initial": self.initial,
            "status": self.status,
            "R": self.R,
            "iterations": self.iterations,
        }


@dataclass
class _Simplices:
    D: list            # sparse (S x V) matrices, one per gradient component
    vertices: np.ndarray  # (S, n+1) node ids
    diam: float


def _freudenthal(R: int, n: int) -> _Simplices:
    """Kuhn/Freudenthal triangulation of the periodic R^n node grid."""
    axes = [np.arange(R)] * n
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    strides = R ** np.arange(n - 1, -1, -1)
    nid = lambda P: (np.mod(P, R) * strides).sum(axis=1)
    rows, cols, vals = [[] for _ in range(n)], [[] for _ in range(n)], [[] for _ in range(n)]
    verts = []
    base = 0
    for perm in itertools.permutations(range(n)):
        chain = [X]
        for ax in perm:
            step = np.zeros(n, dtype=int)
            step[ax] = 1
            chain.append(chain[-1] + step)
        ids = [nid(P) for P in chain]
        sid = base + np.arange(len(X))
        for m, ax in enumerate(perm):
            # d f / d q_ax = R (f(v_{m+1}) - f(v_m))
            rows[ax] += [sid, sid]
            cols[ax] += [ids[m + 1], ids[m]]
            vals[ax] += [np.full(len(X), float(R)), np.full(len(X), -float(R))]
        verts.append(np.column_stack(ids))
        base += len(X)
    V = len(X)
    D = [
        sparse.csr_matrix((np.concatenate(vals[ax]), (np.concatenate(rows[ax]), np.concatenate(cols[ax]))),
                          shape=(base, V))
        for ax in range(n)
    ]
    return _Simplices(D, np.vstack(verts), math.sqrt(n) / R)


def stable_norm_dual(
    metric: TorusMetric,
    a,
    R: int = 64,
    iterations: int = 400,
    *,
    powers=(4, 8, 16, 32, 64, 128),
) -> DualEstimate:
    """Minimise the sampled max of |a + df|_{g*} over piecewise-linear periodic f.

    The smooth surrogate sum |alpha|^p (p increasing) is minimised with
    L-BFGS; the reported value is the exact max over simplex vertices of the
    best potential found, and ``slack`` bounds the variation of the metric
    inside a simplex.
    """
    n = metric.dim
    a = np.asarray(a, dtype=float)
    if a.shape != (n,):
        raise DimensionMismatch(f"class must have {n} components")
    if not np.any(a):
        raise ZeroClass("cohomology class must be non-zero")
    if R % 2 or R < 4:
        raise InvalidParameters("R must be even and >= 4")

    tri = _freudenthal(R, n)
    axes = [np.arange(R) / R] * n
    Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    Minv = metric.inverse_tensor(Q)                      # (V, n, n)
    Mv = Minv[tri.vertices]                              # (S, n+1, n, n)
    V = len(Q)

    def forms(f):
        return a[None, :] + np.column_stack([Dx @ f for Dx in tri.D])

    def norms(alpha):
        return np.sqrt(np.einsum("si,svij,sj->sv", alpha, Mv, alpha))

    def sampled_max(f):
        return float(norms(forms(f)).max())

    f = np.zeros(V)
    initial = sampled_max(f)
    best_f, best = f.copy(), initial
    used = 0
    per_stage = max(1, iterations // len(powers))
    for p in powers:
        scale = best

        def objective(x, p=p, scale=scale):
            alpha = forms(x)
            Ma = np.einsum("svij,sj->svi", Mv, alpha)
            nn = np.sqrt(np.einsum("si,svi->sv", alpha, Ma))
            r = nn / scale
            val = float(np.sum(r**p))
            # d/dalpha (|alpha|_M / scale)^p = p r^{p-2} M alpha / scale^2
            coef = p * r ** (p - 2) / scale**2
            galpha = np.einsum("sv,svi->si", coef, Ma)
            grad = sum(Dx.T @ galpha[:, ax] for ax, Dx in enumerate(tri.D))
            return val, grad

        res = optimize.minimize(objective, best_f, jac=True, method="L-BFGS-B",
                                options={"maxiter": per_stage, "gtol": 1e-12, "ftol": 1e-15})
        used += int(res.nit)
        cand = sampled_max(res.x)
        if cand < best:
            best, best_f = cand, res.x.copy()

    status = "OK"
    if best >= initial * (1 - 1e-12):
        status = "NO_DESCENT"
        best = initial
        logger.debug("dual descent made no progress over f = 0; returning the f = 0 bound")
    # each point of a simplex lies within its diameter of a vertex
    alpha = forms(best_f)
    alpha_max = float(np.max(np.linalg.norm(alpha, axis=1)))
    slack = metric.dual_lipschitz() * alpha_max * tri.diam
    return DualEstimate(tuple(a.tolist()), best, slack, initial, status, R, used)


def dual_lower_bound(metric: TorusMetric, e, R: int = 64, iterations: int = 400, candidates=None) -> tuple[float, DualEstimate]:
    """Best <a, e>/||a||*_upper over candidate classes a (default: e and g_avg e)."""
    e = _class(e, metric.dim).astype(float)
    if candidates is None:
        g = metric.averaged_tensor()
        candidates = [e / np.linalg.norm(e), g @ e / np.linalg.norm(g @ e)]
    best = None
    for a in candidates:
        est = stable_norm_dual(metric, a, R, iterations)
        lb = est.lower_bound_for(e)
        if best is None or lb > best[0]:
            best = (lb, est)
    return best


def flat_norm(metric: TorusMetric, e) -> float:
    """|e|_g for a constant metric."""
    if not metric.is_constant:
        raise InvalidParameters("closed form only for constant metrics")
    e = np.asarray(e, dtype=float)
    return float(math.sqrt(e @ metric.matrix @ e))


# ---------------------------------------------------------------- geodesic-flow growth bound


def verify_geodesic_growth(
    metric: TorusMetric,
    e,
    eps: float = 1e-3,
    K: int = 4,
    R: int = 64,
    *,
    dual_R: int | None = None,
    iterations: int = 400,
    rel_tol: float = 0.01,
    jobs: int = 1,
    primal: NormEstimate | None = None,
) -> Report:
    """Check gamma(f, e) >= ||e|| for the time-one geodesic flow f.

    Constant metrics: gamma(f, e) = max <p, e>/|p|_{g*} is computed exactly on
    the sphere grid and compared with primal and dual stable norms.  Other
    metrics: report the certified lower bound <a, e>/((1 + eps) max|alpha|)
    next to the primal norm.
    """
    from .torus import gamma_torus, linear, weighted_norm

    e = _class(e, metric.dim)
    report = Report("geodesic_growth_bound")
    if primal is None or primal.e != tuple(int(x) for x in e):
        primal = stable_norm_primal(metric, e, K, R, jobs=jobs)
    lb, dual = dual_lower_bound(metric, e, dual_R or R, iterations)
    report.notes.update(primal=primal.to_dict(), dual=dual.to_dict(), e=e.tolist())

    if metric.is_constant:
        F = weighted_norm(np.linalg.inv(metric.matrix))
        G = linear(e.astype(float))
        gam = gamma_torus(F, G)
        report.notes["branch"] = "flat"
        report.notes["gamma"] = gam.to_dict()
        g = gam.value
        report.add("gamma_vs_primal", g, primal.value, abs(g - primal.value) <= rel_tol * primal.value, rel_tol=rel_tol)
        report.add("gamma_vs_dual", g, lb, abs(g - lb) <= rel_tol * lb, rel_tol=rel_tol)
        report.add("gamma_geq_norm", gam.enclosure.hi, lb, gam.enclosure.hi >= lb * (1 - 1e-12))
    else:
        bound = float(np.dot(dual.a, e)) / ((1.0 + eps) * dual.upper)
        report.notes["branch"] = "non_flat"
        report.notes["gamma_lower_bound"] = bound
        report.add("bound_leq_primal", bound, primal.value + primal.slack, bound <= primal.value + primal.slack)
        report.add("bound_geq_0.9_primal", bound, 0.9 * primal.value, bound >= 0.9 * primal.value)
    return report
