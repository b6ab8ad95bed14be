"""Experiment configuration (JSON, versioned, unknown keys rejected)."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .circle import CircleLift
from .errors import RelGrowthError
from .stable_norm import TorusMetric, metric_from_spec
from .torus import HomogeneousHamiltonian, hamiltonian, sphere_grid

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _built(fn):
    try:
        return fn()
    except (RelGrowthError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid declaration: {exc}") from exc


class ArnoldParams(_Strict):
    a: float
    b: float = 0.0
    phi: float = 0.0
    j: int = Field(1, ge=1)


class LiftConfig(_Strict):
    """Exactly one of ``translation``, ``arnold`` or ``word``."""

    translation: Optional[float] = None
    arnold: Optional[ArnoldParams] = None
    word: Optional[list[dict]] = None

    @model_validator(mode="after")
    def _one_form(self):
        given = [x is not None for x in (self.translation, self.arnold, self.word)]
        if sum(given) != 1:
            raise ValueError("declare exactly one of translation, arnold, word")
        _built(self.build)
        return self

    def build(self) -> CircleLift:
        if self.translation is not None:
            return CircleLift.translation(self.translation)
        if self.arnold is not None:
            p = self.arnold
            return CircleLift.arnold(p.a, p.b, p.phi, p.j)
        return CircleLift.from_dict({"word": self.word})


class CircleConfig(_Strict):
    f: LiftConfig
    g: Optional[LiftConfig] = None
    n_iter: int = Field(100_000, ge=1)
    K: int = Field(100, ge=1)
    grid: int = Field(2048, ge=16)
    refined_grid: int = Field(16384, ge=16)
    tau: float = Field(1e-9, gt=0)
    q_max: int = Field(1000, ge=1)

    @model_validator(mode="after")
    def _grids(self):
        if self.refined_grid < self.grid:
            raise ValueError("refined_grid must be at least grid")
        return self


class TorusConfig(_Strict):
    dim: int = Field(2, ge=2)
    grid_size: Optional[int] = Field(None, ge=8)
    F: dict
    G: Optional[dict] = None
    a: Optional[list[float]] = None
    H_ref: dict = Field(default_factory=lambda: {"name": "euclidean_norm"})
    c: float = Field(2.5, gt=0)
    k: int = Field(3, ge=1)

    @model_validator(mode="after")
    def _declarations(self):
        for spec in (self.F, self.G, self.H_ref):
            if spec is not None:
                _built(lambda s=spec: self.hamiltonian(s))
        if self.a is not None and len(self.a) != self.dim:
            raise ValueError(f"a must have {self.dim} components")
        return self

    def hamiltonian(self, spec: dict) -> HomogeneousHamiltonian:
        return hamiltonian(spec, self.dim, sphere_grid(self.dim, self.grid_size))


class MetricConfig(_Strict):
    metric: dict
    e: list[int]
    a: Optional[list[float]] = None
    K: int = Field(4, ge=1)
    R: int = Field(64, ge=4)
    dual_R: Optional[int] = Field(None, ge=4)
    iterations: int = Field(400, ge=0)
    eps: float = Field(1e-3, gt=0)
    tube: float = Field(0.5, gt=0)

    @model_validator(mode="after")
    def _declarations(self):
        m = _built(self.build_metric)
        if len(self.e) != m.dim or not any(self.e):
            raise ValueError(f"e must be a non-zero integer vector with {m.dim} components")
        if self.a is not None and (len(self.a) != m.dim or not any(self.a)):
            raise ValueError(f"a must be a non-zero vector with {m.dim} components")
        if (self.dual_R or self.R) % 2:
            raise ValueError("dual resolution must be even")
        return self

    def build_metric(self) -> TorusMetric:
        return metric_from_spec(self.metric)


class VerifyConfig(_Strict):
    """Parameters of the acceptance suite; defaults are the documented tolerances."""

    criteria: list[int] = Field(default_factory=lambda: list(range(1, 13)))
    rot_n: int = Field(100_000, ge=1)
    rot_K: int = Field(100, ge=1)
    rot_tol: float = 5e-2
    rot_seconds: float = 60.0
    pair_tol: float = 5e-2
    kappa_tol: float = 1e-1
    product_K: int = Field(50, ge=1)
    torus_width: float = 1e-3
    torus_seconds: float = 5.0
    shape_instances: int = Field(20, ge=1)
    directions: int = Field(100, ge=1)
    kappa_pairs: int = Field(20, ge=1)
    kappa_match: float = 1e-6
    flat_R: int = Field(64, ge=4)
    flat_K: int = Field(4, ge=1)
    flat_tol: float = 1e-2
    flat_seconds: float = 120.0
    conformal_R: int = Field(128, ge=4)
    conformal_K: int = Field(2, ge=1)
    conformal_dual_R: int = Field(128, ge=4)
    conformal_window: tuple[float, float] = (0.69, 0.71)
    conformal_dual_min: float = 0.65
    eps: float = 1e-3
    nonflat_fraction: float = 0.9
    flow_K: int = Field(200, ge=1)
    flow_times: list[float] = Field(default_factory=lambda: [0.25, 0.37, 0.5])
    flow_tol: float = 2e-2

    @model_validator(mode="after")
    def _ids(self):
        bad = [c for c in self.criteria if not 1 <= c <= 12]
        if bad:
            raise ValueError(f"unknown criteria {bad}")
        return self


class ExperimentConfig(_Strict):
    schema_version: Literal[1]
    model: Optional[Literal["circle", "torus", "metric"]] = None
    circle: Optional[CircleConfig] = None
    torus: Optional[TorusConfig] = None
    metric: Optional[MetricConfig] = None
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    report_name: str = "report.json"

    @model_validator(mode="after")
    def _selected(self):
        if self.model is not None and getattr(self, self.model) is None:
            raise ValueError(f"model {self.model!r} selected but its section is missing")
        return self

    def section(self, name: str):
        sec = getattr(self, name)
        if sec is None:
            raise ValueError(f"config has no {name!r} section")
        return sec


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Parse and validate a config file; ``None`` loads the shipped default."""
    if path is None:
        text = resources.files("relgrowth").joinpath("data/default.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return ExperimentConfig.model_validate(json.loads(text))
