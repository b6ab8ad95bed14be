"""Batch command line: ``relgrowth <subcommand> [--config PATH] [--out DIR] [--seed N] [--jobs N]``.

Exit codes: 0 success, 1 failed verification or computation error,
2 configuration error.  Results go to stdout (one line per number, each
with its enclosure or tolerance); diagnostics go to stderr.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from . import torus
from .circle import CircleGroup, gamma_exact, rotation_number
from .config import ExperimentConfig, load_config
from .errors import RelGrowthError
from .order_core import relative_growth
from .stable_norm import dual_lower_bound, stable_norm_dual, stable_norm_primal
from .verification import report_json, run_suite

logger = logging.getLogger("relgrowth")


class ConfigError(click.ClickException):
    exit_code = 2


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _write(out: Path | None, name: str, text: str):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def common(fn):
    """Shared flags, config loading and error mapping."""

    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                  help="Experiment config (JSON). Defaults to the shipped config.")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                  help="Directory for JSON and CSV artifacts.")
    @click.option("--seed", type=int, default=0, show_default=True, help="Seed for sampled checks.")
    @click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
                  help="Worker processes for shortest-path runs.")
    @functools.wraps(fn)
    def wrapper(config_path, out_dir, seed, jobs):
        try:
            cfg = load_config(config_path)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except ValidationError as exc:
            raise ConfigError(f"invalid config:\n{exc}") from exc
        out = Path(out_dir) if out_dir else None
        try:
            return fn(cfg, out, seed, jobs)
        except ValueError as exc:
            if isinstance(exc, RelGrowthError):
                click.echo(json.dumps(exc.to_dict(), sort_keys=True), err=True)
                sys.exit(1)
            raise ConfigError(str(exc)) from exc
        except RelGrowthError as exc:
            click.echo(json.dumps(exc.to_dict(), sort_keys=True), err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Relative growth in partially ordered groups: circle, torus and stable-norm models."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@common
def rot(cfg: ExperimentConfig, out, seed, jobs):
    """Rotation numbers of the configured lifts."""
    c = cfg.section("circle")
    result = {}
    for name in ("f", "g"):
        lift = getattr(c, name)
        if lift is None:
            continue
        enc = rotation_number(lift.build(), c.n_iter)
        result[name] = {**enc.to_dict(), "n": c.n_iter}
        click.echo(f"rot[{name}] = {_fmt(enc.value)} ± {_fmt(enc.halfwidth)}")
    _write(out, "rot.json", _json(result))


@main.command("gamma-circle")
@common
def gamma_circle(cfg: ExperimentConfig, out, seed, jobs):
    """gamma_k(f, g) for k <= K with trend, envelope and the rotation-number value."""
    c = cfg.section("circle")
    if c.g is None:
        raise ConfigError("gamma-circle needs both f and g")
    f, g = c.f.build(), c.g.build()
    model = CircleGroup(c.grid, c.refined_grid, c.tau)
    est = relative_growth(model, f, g, c.K, q_max=c.q_max)
    exact = gamma_exact(f, g, c.n_iter)
    click.echo(f"gamma_trend = {_fmt(est.trend)} (tolerance {_fmt(cfg.verify.pair_tol)}, K = {c.K})")
    click.echo(f"gamma_envelope = {_fmt(est.upper_envelope)} (upper bound)")
    click.echo(f"gamma_rot = {_fmt(exact.value)} in [{_fmt(exact.lo)}, {_fmt(exact.hi)}]")
    _write(out, "gamma_circle.json", _json({"growth": est.to_dict(), "rot_ratio": exact.to_dict()}))
    _write(out, "gamma_circle.csv",
           _csv(["k", "gamma_k", "gamma_k_over_k"], [[k, gk, gk / k] for k, gk in enumerate(est.gammas, 1)]))


def _torus_pair(cfg: ExperimentConfig):
    t = cfg.section("torus")
    F = t.hamiltonian(t.F)
    G = t.hamiltonian(t.G) if t.G is not None else None
    return t, F, G


@main.command("gamma-torus")
@common
def gamma_torus_cmd(cfg: ExperimentConfig, out, seed, jobs):
    """max G/F over the sphere grid, with its enclosure."""
    t, F, G = _torus_pair(cfg)
    if G is None:
        raise ConfigError("gamma-torus needs both F and G")
    g = torus.gamma_torus(F, G)
    result = {"gamma": g.to_dict()}
    click.echo(f"gamma = {_fmt(g.value)} in [{_fmt(g.enclosure.lo)}, {_fmt(g.enclosure.hi)}]")
    if g.refined is not None:
        click.echo(f"gamma_closed_form = {_fmt(g.refined)} in [{_fmt(g.enclosure.lo)}, {_fmt(g.enclosure.hi)}]")
    if G.strictly_positive:
        kap = torus.kappa_torus(F, G)
        result["kappa"] = {"value": kap, "grid_h": F.grid.h}
        click.echo(f"kappa = {_fmt(kap)} (grid h = {_fmt(F.grid.h)})")
    _write(out, "gamma_torus.json", _json(result))
    _write(out, "gamma_torus.csv", _csv(
        [f"p{i + 1}" for i in range(F.dim)] + ["F", "G", "ratio"],
        [[*map(float, d), float(a), float(b), float(b / a)] for d, a, b in zip(F.grid.directions, F.values, G.values)],
    ))


@main.command()
@common
def shape(cfg: ExperimentConfig, out, seed, jobs):
    """Shape values r-(a), r+(a), the property checks and the growth lower bound."""
    t, F, G = _torus_pair(cfg)
    if t.a is None:
        raise ConfigError("shape needs a cohomology class 'a'")
    sv = torus.shape_values(t.a, F)
    result = {"shape": sv.to_dict()}
    click.echo(f"r_minus = {_fmt(sv.r_minus)} (exact)")
    click.echo(f"r_plus = {_fmt(sv.r_plus)} (exact)")
    if G is not None:
        rep = torus.check_shape_properties(F, G, t.a, t.c, t.k)
        result["properties"] = rep.to_dict()
        click.echo(f"properties = {'pass' if rep.ok else 'FAIL'} ({len(rep.records)} checks)")
        if float(G(np.asarray(t.a, dtype=float))) > 0:
            lb = torus.growth_lower_bound(F, G, t.a)
            g = torus.gamma_torus(F, G)
            result["growth_lower_bound"] = {"value": lb, "gamma": g.to_dict()}
            click.echo(f"growth_lower_bound = {_fmt(lb)} <= gamma in [{_fmt(g.enclosure.lo)}, {_fmt(g.enclosure.hi)}]")
    H_ref = t.hamiltonian(t.H_ref)
    if F.strictly_positive:
        _write(out, "zk_embedding.csv", torus.zk_embed(F, H_ref).to_csv())
    _write(out, "shape.json", _json(result))


def _metric_section(cfg: ExperimentConfig):
    m = cfg.section("metric")
    return m, m.build_metric()


@main.command("stable-norm")
@common
def stable_norm_cmd(cfg: ExperimentConfig, out, seed, jobs):
    """Primal (shortest loops) and dual (closed-form minimax) estimates of ||e||."""
    m, metric = _metric_section(cfg)
    est = stable_norm_primal(metric, m.e, m.K, m.R, tube=m.tube, jobs=jobs)
    if m.a is not None:
        dual = stable_norm_dual(metric, m.a, m.dual_R or m.R, m.iterations)
        lower = dual.lower_bound_for(m.e)
    else:
        lower, dual = dual_lower_bound(metric, m.e, m.dual_R or m.R, m.iterations)
    click.echo(f"norm_primal = {_fmt(est.value)} ± {_fmt(est.slack)} (R = {m.R}, K = {m.K})")
    click.echo(f"norm_dual_lower = {_fmt(lower)} (certified up to slack {_fmt(dual.slack)}, status {dual.status})")
    payload = est.to_dict()
    payload["dual_lower"] = lower
    _write(out, "stable_norm.json", _json({"primal": payload, "dual": dual.to_dict()}))
    _write(out, "stable_norm.csv",
           _csv(["k", "length", "length_over_k"], [[k, l, l / k] for k, l in enumerate(est.lengths, 1)]))


@main.command()
@common
def beta(cfg: ExperimentConfig, out, seed, jobs):
    """Minimal action beta(e) = ||e||^2 / 2 from the primal norm."""
    m, metric = _metric_section(cfg)
    est = stable_norm_primal(metric, m.e, m.K, m.R, tube=m.tube, jobs=jobs)
    value = 0.5 * est.value**2
    tol = est.value * est.slack + 0.5 * est.slack**2
    click.echo(f"beta = {_fmt(value)} ± {_fmt(tol)}")
    _write(out, "beta.json", _json({"beta": value, "tolerance": tol, "norm": est.to_dict()}))


@main.command()
@common
def verify(cfg: ExperimentConfig, out, seed, jobs):
    """Run the acceptance suite; exit 1 if any criterion fails."""
    report = run_suite(cfg.verify, seed=seed, jobs=jobs)
    for r in report["criteria"]:
        click.echo(f"[{'PASS' if r['pass'] else 'FAIL'}] {r['id']:>2} {r['title']}", err=True)
    text = report_json(report)
    click.echo(text, nl=False)
    _write(out, cfg.report_name, text)
    if not report["ok"]:
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    main()
