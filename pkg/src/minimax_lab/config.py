"""Experiment configuration: JSON schema, named presets and builders that turn
a validated config into library objects."""

import copy
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from . import restrictions as R
from .errors import ArgumentError, MinimaxLabError
from .estimators import (
    CovEquivariant,
    Identity,
    LinearMRE,
    MREScale,
    OrderedMeansBayes,
    PitmanLocation,
    Projected,
    QuantileFamily,
    QuantileMRE,
    RestrictedFlatBayes,
    ScaleMultiple,
    ScaleProductMRE,
    WishartIdentity,
    a0,
)
from .losses import LossSpec
from .models import GROUP_KINDS, BASE_DENSITIES, ModelSpec

COMMANDS = ("risk", "dominate", "conditions", "lfp", "project", "optimize")

ESTIMATOR_PRESETS = (
    "pitman",
    "katz",
    "tmre",
    "quantile-mre",
    "js-cov",
    "pava-x",
    "identity",
    "mre-scale",
    "mre-scale-product",
    "hartigan",
    "linear-mre",
    "s-over-m",
    "cov-diagonal",
    "quantile-family",
    "scale-multiple",
)

RESTRICTION_KINDS = (
    "half-line-lower",
    "half-line-upper",
    "interval",
    "orthant",
    "simple-order",
    "tree-order",
    "umbrella",
    "cone",
    "scale-product",
    "quantile-cone",
    "quantile-box",
    "cov-det",
    "cov-trace",
)

_STRICT = ConfigDict(extra="forbid")


class ModelBlock(BaseModel):
    model_config = _STRICT
    kind: Literal[GROUP_KINDS]
    base: Literal[BASE_DENSITIES] = "normal"
    m: int = 1
    p: int = 1
    shape: float | None = None


class LossBlock(BaseModel):
    model_config = _STRICT
    estimand: str
    shape: str
    eta: float = 0.0
    power: float = 1.0
    a: list[float] | None = None
    r: list[float] | None = None


class EstimatorBlock(BaseModel):
    model_config = _STRICT
    name: str
    a: list[float] | None = None
    c: float | None = None

    @model_validator(mode="after")
    def _known(self):
        if self.name not in ESTIMATOR_PRESETS:
            raise ValueError(f"unknown estimator {self.name!r}; valid presets: {', '.join(ESTIMATOR_PRESETS)}")
        return self


class RestrictionBlock(BaseModel):
    model_config = _STRICT
    kind: Literal[RESTRICTION_KINDS]
    a: float | None = None
    b: float | None = None
    on: Literal["location", "scale", "location-scale"] = "location"
    scale_unknown: bool = False
    p: int | None = None
    r: list[float] | int | None = None
    peak: int | None = None
    matrix: list[list[float]] | None = None
    c: float | None = None
    eta: float | None = None
    bound: float | None = None


class Linspace(BaseModel):
    model_config = _STRICT
    start: float
    stop: float
    num: int


class GridBlock(BaseModel):
    model_config = _STRICT
    points: list[list[float]] | None = None
    linspace: Linspace | None = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.points is None) == (self.linspace is None):
            raise ValueError("grid needs exactly one of 'points' or 'linspace'")
        if self.linspace is not None and self.linspace.num < 1:
            raise ValueError("linspace num must be positive")
        return self

    def values(self):
        if self.points is not None:
            return [np.asarray(p, dtype=float) for p in self.points]
        ls = self.linspace
        return [np.array([v]) for v in np.linspace(ls.start, ls.stop, ls.num)]


class ExperimentConfig(BaseModel):
    model_config = _STRICT
    command: Literal[COMMANDS]
    preset: str | None = None
    model: ModelBlock | None = None
    loss: LossBlock | None = None
    estimator: EstimatorBlock | None = None
    challenger: EstimatorBlock | None = None
    incumbent: EstimatorBlock | None = None
    restriction: RestrictionBlock | None = None
    grid: GridBlock | None = None
    replicates: int | None = None
    seed: int | None = None
    method: Literal["monte-carlo", "quadrature"] = "monte-carlo"
    rel_tol: float = 1e-8
    output: str | None = None
    format: Literal["csv", "json"] = "csv"
    n_max: int = 50
    probes: int = 1000
    probe_box: float | None = None
    nesting_samples: int = 1000
    point: list[float] | None = None
    n_list: list[int] = [1, 2, 4, 8, 16]
    spacing: float = 0.25
    family: Literal["scale-multiple", "quantile", "cov-diagonal"] | None = None
    bounds: list[float] | None = None
    tol: float = 1e-4
    workers: int | None = None


# ---------------------------------------------------------------------------
# experiment presets: one per worked example

_NORMAL = {"kind": "location", "base": "normal", "m": 1}

EXPERIMENT_PRESETS = {
    "quantile-mre-normal": {
        "command": "risk",
        "model": {"kind": "location-scale", "base": "normal", "m": 3},
        "loss": {"estimand": "quantile", "shape": "squared", "eta": 1.0},
        "estimator": {"name": "quantile-mre"},
        "grid": {"points": [[0.0, 1.0]]},
        "replicates": 1_000_000,
    },
    "quantile-omega1": {
        "command": "risk",
        "model": {"kind": "location-scale", "base": "normal", "m": 3},
        "loss": {"estimand": "quantile", "shape": "squared", "eta": 1.0},
        "estimator": {"name": "quantile-mre"},
        "restriction": {"kind": "quantile-cone", "eta": 1.0},
        "grid": {"points": [[0.0, 1.0], [-1.0, 1.0], [3.0, 0.5], [-4.0, 5.0]]},
        "replicates": 1_000_000,
    },
    "katz-halfline": {
        "command": "dominate",
        "model": _NORMAL,
        "loss": {"estimand": "location", "shape": "squared"},
        "challenger": {"name": "katz"},
        "incumbent": {"name": "identity"},
        "restriction": {"kind": "half-line-lower", "a": 0.0},
        "grid": {"points": [[0.0], [0.25], [0.5], [1.0], [2.0], [4.0]]},
        "replicates": 1_000_000,
    },
    "tmre-interval": {
        "command": "risk",
        "method": "quadrature",
        "model": _NORMAL,
        "loss": {"estimand": "location", "shape": "squared"},
        "estimator": {"name": "tmre"},
        "restriction": {"kind": "interval", "a": -1.0, "b": 1.0},
        "grid": {"linspace": {"start": -1.0, "stop": 1.0, "num": 41}},
    },
    "pava-cone": {
        "command": "dominate",
        "model": {"kind": "multivariate-location", "base": "normal", "m": 1, "p": 3},
        "loss": {"estimand": "location", "shape": "squared"},
        "challenger": {"name": "pava-x"},
        "incumbent": {"name": "identity"},
        "restriction": {"kind": "simple-order", "p": 3},
        "grid": {"points": [[0.0, 0.0, 0.0], [0.0, 0.5, 1.0], [-1.0, 0.0, 1.0], [0.0, 0.0, 2.0], [-3.0, 0.0, 3.0]]},
        "replicates": 100_000,
    },
    "hartigan-cone": {
        "command": "dominate",
        "model": {"kind": "multivariate-location", "base": "normal", "m": 1, "p": 2},
        "loss": {"estimand": "location", "shape": "squared"},
        "challenger": {"name": "hartigan"},
        "incumbent": {"name": "identity"},
        "restriction": {"kind": "simple-order", "p": 2},
        "grid": {"points": [[0.0, 0.0], [0.0, 0.5], [0.0, 1.0], [-0.5, 0.5], [0.0, 2.0],
                            [-1.0, 1.0], [1.0, 2.5], [-3.0, 3.0], [-5.0, 5.0]]},
        "replicates": 1_000_000,
    },
    "scale-lower": {
        "command": "risk",
        "model": {"kind": "scale", "base": "exponential", "m": 3},
        "loss": {"estimand": "scale", "shape": "scale-squared"},
        "estimator": {"name": "mre-scale"},
        "restriction": {"kind": "half-line-lower", "a": 1.0, "on": "scale"},
        "grid": {"points": [[1.0], [2.0], [5.0], [10.0]]},
        "replicates": 1_000_000,
    },
    "js-cov": {
        "command": "dominate",
        "model": {"kind": "wishart", "m": 5, "p": 2},
        "loss": {"estimand": "covariance", "shape": "stein"},
        "challenger": {"name": "js-cov"},
        "incumbent": {"name": "s-over-m"},
        "grid": {"points": [[1.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 4.0], [2.0, 0.5, 0.5, 1.0]]},
        "replicates": 100_000,
    },
    "linear-combination": {
        "command": "risk",
        "model": {"kind": "multivariate-location", "base": "exponential", "m": 1, "p": 2},
        "loss": {"estimand": "linear", "shape": "squared", "a": [1.0, -1.0]},
        "estimator": {"name": "linear-mre", "a": [1.0, -1.0]},
        "restriction": {"kind": "simple-order", "p": 2},
        "grid": {"points": [[0.0, 0.0], [0.0, 1.0], [-2.0, 3.0]]},
        "replicates": 1_000_000,
    },
    "lfp-halfline": {
        "command": "lfp",
        "model": _NORMAL,
        "loss": {"estimand": "location", "shape": "squared"},
        "restriction": {"kind": "half-line-lower", "a": 0.0},
        "n_list": [1, 2, 4, 8, 16],
        "spacing": 0.25,
    },
    "cov-optimize": {
        "command": "optimize",
        "model": {"kind": "wishart", "m": 5, "p": 2},
        "loss": {"estimand": "covariance", "shape": "stein"},
        "family": "cov-diagonal",
        "replicates": 100_000,
    },
}

# commands that draw random numbers need an explicit seed
_SEEDED = {"risk": "monte-carlo", "dominate": True, "conditions": True, "optimize": "monte-carlo"}


def merge_config(base, over):
    """Overlay ``over`` on ``base``: blocks merge key by key unless the
    override names a different ``kind``/``name``; grids are replaced whole."""
    out = copy.deepcopy(base)
    for key, value in over.items():
        old = out.get(key)
        replace = key == "grid" or not isinstance(value, dict) or not isinstance(old, dict)
        if not replace:
            tag = "kind" if "kind" in value else "name" if "name" in value else None
            replace = tag is not None and old.get(tag) != value[tag]
        out[key] = copy.deepcopy(value) if replace else {**old, **copy.deepcopy(value)}
    return out


def _path(loc):
    parts = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(("." if parts else "") + str(item))
    return "".join(parts) or "$"


def _semantic_errors(cfg):
    errors = []
    need = _SEEDED.get(cfg.command)
    if need is True or (need and cfg.method == need):
        if cfg.seed is None:
            errors.append("seed required")
    if cfg.seed is not None and not 0 <= cfg.seed < 2**64:
        errors.append("seed: must be a 64-bit unsigned integer")
    if cfg.replicates is not None and cfg.replicates < 1:
        errors.append("replicates: must be positive")
    if not cfg.rel_tol > 0:
        errors.append("rel_tol: must be positive")
    required = {
        "risk": ("model", "loss", "estimator", "grid"),
        "dominate": ("model", "loss", "challenger", "incumbent", "grid"),
        "conditions": ("restriction",),
        "lfp": ("model", "restriction"),
        "project": ("restriction", "point"),
        "optimize": ("model", "loss", "family"),
    }[cfg.command]
    for name in required:
        if getattr(cfg, name) is None:
            errors.append(f"{name}: required for command {cfg.command!r}")
    if cfg.n_max < 1:
        errors.append("n_max: must be positive")
    if cfg.probes < 1:
        errors.append("probes: must be positive")
    if cfg.workers is not None and cfg.workers < 1:
        errors.append("workers: must be positive")
    return errors


def validate(data):
    """``(config, [])`` for a valid config dict, ``(None, errors)`` otherwise.

    A ``preset`` key pulls in the named experiment's settings; explicit keys
    override them.  Errors are collected, never partially applied.
    """
    if not isinstance(data, dict):
        return None, ["$: config must be a JSON object"]
    errors = []
    preset = data.get("preset")
    if preset is not None:
        if preset not in EXPERIMENT_PRESETS:
            return None, [f"preset: unknown preset {preset!r}; valid presets: {', '.join(EXPERIMENT_PRESETS)}"]
        base = EXPERIMENT_PRESETS[preset]
        data = merge_config(base, {k: v for k, v in data.items() if k != "preset" and v is not None})
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        for err in exc.errors():
            msg = err["msg"].removeprefix("Value error, ")
            if tuple(err["loc"]) == ("seed",) and err["type"] == "missing":
                msg = "seed required"
            errors.append(f"{_path(err['loc'])}: {msg}")
        if not any("seed" in e for e in errors) and data.get("seed") is None:
            need = _SEEDED.get(data.get("command"))
            if need is True or (need and data.get("method", "monte-carlo") == need):
                errors.append("seed required")
        return None, errors
    errors.extend(_semantic_errors(cfg))
    if not errors:
        try:
            build_all(cfg)
        except MinimaxLabError as exc:
            errors.append(str(exc))
    return (cfg, []) if not errors else (None, errors)


def normalized(cfg):
    """The config with every documented default filled in."""
    out = cfg.model_dump(mode="json")
    if out["replicates"] is None and cfg.model is not None:
        out["replicates"] = 100_000 if cfg.model.kind == "wishart" else 1_000_000
    return out


# ---------------------------------------------------------------------------
# builders


def build_model(block):
    return ModelSpec(kind=block.kind, base=block.base, m=block.m, p=block.p, shape=block.shape)


def build_loss(block):
    return LossSpec(
        estimand=block.estimand,
        shape=block.shape,
        eta=block.eta,
        power=block.power,
        a=tuple(block.a) if block.a is not None else None,
        r=tuple(block.r) if block.r is not None else None,
    )


def build_restriction(block, model=None):
    k = block.kind
    p = block.p if block.p is not None else (model.p if model is not None else None)

    def need(*names):
        missing = [n for n in names if getattr(block, n) is None and not (n == "p" and p is not None)]
        if missing:
            raise ArgumentError(f"restriction {k!r} needs {', '.join(missing)}")

    if k in ("half-line-lower", "half-line-upper"):
        need("a")
        cls = R.HalfLineLower if k == "half-line-lower" else R.HalfLineUpper
        return cls(block.a, on=block.on)
    if k == "interval":
        need("a", "b")
        return R.Interval(block.a, block.b, scale_unknown=block.scale_unknown)
    if k in ("orthant", "simple-order", "tree-order", "umbrella"):
        need("p")
        r = block.r if isinstance(block.r, int) else None
        return R.make_cone(k, p, r=r, peak=block.peak)
    if k == "cone":
        need("matrix")
        return R.PolyhedralCone(np.asarray(block.matrix, dtype=float))
    if k == "scale-product":
        need("r", "c")
        return R.ScaleProduct(tuple(block.r), block.c)
    if k == "quantile-cone":
        need("eta")
        return R.QuantileCone(block.eta)
    if k == "quantile-box":
        need("a", "b")
        return R.QuantileBox(block.a, block.b)
    need("bound")
    cls = R.CovDet if k == "cov-det" else R.CovTrace
    return cls(block.bound, p=p or 2)


def build_estimator(block, model, loss, restriction=None):
    name = block.name
    if name == "identity":
        return WishartIdentity() if model.kind == "wishart" else Identity()
    if name == "pitman":
        return PitmanLocation(model, loss.shape if loss.shape in ("squared", "absolute", "quartic") else "squared")
    if name == "katz":
        if restriction is None:
            raise ArgumentError("katz needs a half-line or interval restriction")
        return RestrictedFlatBayes(model, restriction)
    if name in ("tmre", "pava-x"):
        if restriction is None:
            raise ArgumentError(f"{name} needs a restriction to project onto")
        base = Identity() if model.m == 1 and model.base == "normal" else PitmanLocation(model)
        return Projected(base, restriction, name=name)
    if name == "quantile-mre":
        return QuantileMRE(loss.eta)
    if name == "quantile-family":
        return QuantileFamily(loss.eta, _need_c(block))
    if name == "scale-multiple":
        return ScaleMultiple(_need_c(block))
    if name == "mre-scale":
        return MREScale(model, loss.shape, loss.power)
    if name == "mre-scale-product":
        return ScaleProductMRE(model, loss.r, loss.shape)
    if name == "hartigan":
        return OrderedMeansBayes(model)
    if name == "linear-mre":
        a = block.a if block.a is not None else loss.a
        if a is None:
            raise ArgumentError("linear-mre needs coefficients a")
        comp = ModelSpec("location", model.base, m=1, shape=model.shape)
        return LinearMRE([comp] * len(a), a)
    if model.kind != "wishart":
        raise ArgumentError(f"{name} needs a Wishart model")
    if name == "js-cov":
        return CovEquivariant(a0(model.m, model.p), name="js-cov")
    if name == "s-over-m":
        return CovEquivariant(np.full(model.p, 1.0 / model.m), name="s-over-m")
    if block.a is None:
        raise ArgumentError("cov-diagonal needs the diagonal a")
    return CovEquivariant(np.asarray(block.a), name="cov-diagonal")


def _need_c(block):
    if block.c is None:
        raise ArgumentError(f"{block.name} needs the constant c")
    return block.c


def build_all(cfg):
    """Library objects for a validated config (raises on inconsistencies)."""
    out = {}
    out["model"] = build_model(cfg.model) if cfg.model else None
    out["loss"] = build_loss(cfg.loss) if cfg.loss else None
    out["restriction"] = build_restriction(cfg.restriction, out["model"]) if cfg.restriction else None
    for key in ("estimator", "challenger", "incumbent"):
        block = getattr(cfg, key)
        if block is not None:
            if out["model"] is None or out["loss"] is None:
                raise ArgumentError(f"{key} needs model and loss blocks")
            out[key] = build_estimator(block, out["model"], out["loss"], out["restriction"])
    return out
