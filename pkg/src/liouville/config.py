"""Experiment configuration: a single strict JSON document."""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .criterion import check_rho
from .fieldio import read_field
from .minimizer import SolverOptions
from .model import CouplingMatrix, SingularModel, SingularSource
from .torus import TorusGrid


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_point = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_nums = {"type": "array", "items": _num, "minItems": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _obj(
    {
        "grid_n": {"type": "integer"},
        "A": {"type": "array", "items": _nums, "minItems": 1},
        "rho": _nums,
        "sources": {"type": "array", "items": _obj({"point": _point, "alpha": _nums}, ["point", "alpha"])},
        "h_spec": {"type": "string"},
        "solver": _obj({
            "max_iters": {"type": "integer", "minimum": 0},
            "tol_h_minus_1": _num,
            "armijo_c": _num,
            "backtrack_factor": _num,
            "initial_step": _num,
            "record_trace": {"type": "boolean"},
        }),
        "minimize": _obj({"init": {"enum": ["zero", "random"]}}),
        "sweep": _obj({
            "ranges": {"type": "array", "items": _obj({
                "component": {"type": "integer", "minimum": 0},
                "start": _num,
                "stop": _num,
                "num": {"type": "integer", "minimum": 1},
            }, ["component", "start", "stop", "num"])},
            "minimize": {"type": "boolean"},
        }),
        "blowup": _obj({
            "lambdas": {"type": "array", "items": _num},
            "subset": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "point": _point,
        }),
        "pohozaev": _obj({
            "field": {"enum": ["bubble", "zero", "continuation", "file"]},
            "path": {"type": "string"},
            "point": _point,
            "radii": _nums,
            "bubble_lambda": _num,
            "bubble_center": _point,
            "continuation_steps": {"type": "integer", "minimum": 1},
        }),
    },
    ["grid_n", "A", "rho"],
)


@dataclass
class SweepRange:
    component: int
    start: float
    stop: float
    num: int


@dataclass
class ExperimentConfig:
    grid_n: int
    A: list
    rho: list
    sources: list = field(default_factory=list)
    h_spec: str = "constant"
    solver: dict = field(default_factory=lambda: asdict(SolverOptions()))
    minimize: dict = field(default_factory=lambda: {"init": "zero"})
    sweep: dict = field(default_factory=lambda: {"ranges": [], "minimize": False})
    blowup: dict = field(default_factory=lambda: {"lambdas": [], "subset": None, "point": None})
    pohozaev: dict = field(
        default_factory=lambda: {
            "field": "bubble",
            "path": None,
            "point": None,
            "radii": None,
            "bubble_lambda": 64.0,
            "bubble_center": [0.5, 0.5],
            "continuation_steps": 6,
        }
    )
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    def effective(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        for block in ("blowup", "pohozaev"):
            d[block] = {k: v for k, v in d[block].items() if v is not None}
        return d

    def solver_options(self) -> SolverOptions:
        return SolverOptions(**self.solver)

    def build_model(self) -> SingularModel:
        return _build_model(self)


def _merge(defaults: dict, given: dict | None) -> dict:
    out = copy.deepcopy(defaults)
    out.update(given or {})
    return out


def _wrap(where: str, fn, *args):
    try:
        return fn(*args)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _build_model(cfg: ExperimentConfig) -> SingularModel:
    grid = _wrap("grid_n", TorusGrid, cfg.grid_n)
    A = _wrap("A", CouplingMatrix, cfg.A)
    sources = []
    for m, s in enumerate(cfg.sources):
        src = _wrap(f"sources.{m}.alpha", SingularSource, s["point"], s["alpha"])
        if src.alpha.shape != (A.N,):
            raise ConfigError(f"sources.{m}.alpha: expected {A.N} entries, got {src.alpha.shape[0]}")
        sources.append(src)
    h = None
    if cfg.h_spec != "constant":
        path = Path(cfg.h_spec)
        if not path.is_absolute():
            path = cfg.base_dir / path
        h = _wrap("h_spec", read_field, path)
        if h.shape[0] == 1:
            h = h[0]
    model = _wrap("sources", SingularModel, A, grid, tuple(sources), h)
    _wrap("rho", check_rho, model, cfg.rho)
    return model


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(raw, base_dir=path.parent)


def config_from_dict(raw: dict, base_dir=Path(".")) -> ExperimentConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}")
    base = ExperimentConfig(grid_n=raw["grid_n"], A=raw["A"], rho=raw["rho"])
    cfg = ExperimentConfig(
        grid_n=raw["grid_n"],
        A=[[float(a) for a in row] for row in raw["A"]],
        rho=[float(r) for r in raw["rho"]],
        sources=[{"point": [float(c) for c in s["point"]], "alpha": [float(a) for a in s["alpha"]]}
                 for s in raw.get("sources", [])],
        h_spec=raw.get("h_spec", "constant"),
        solver=_merge(base.solver, raw.get("solver")),
        minimize=_merge(base.minimize, raw.get("minimize")),
        sweep=_merge(base.sweep, raw.get("sweep")),
        blowup=_merge(base.blowup, raw.get("blowup")),
        pohozaev=_merge(base.pohozaev, raw.get("pohozaev")),
        base_dir=Path(base_dir),
    )
    _wrap("solver", cfg.solver_options)
    cfg.build_model()
    return cfg


def sweep_ranges(cfg: ExperimentConfig) -> list[SweepRange]:
    ranges = [SweepRange(**r) for r in cfg.sweep["ranges"]]
    if len(ranges) > 2:
        raise ConfigError(f"sweep.ranges: at most 2 varying components, got {len(ranges)}")
    N = len(cfg.rho)
    seen = set()
    for k, r in enumerate(ranges):
        if r.component >= N:
            raise ConfigError(f"sweep.ranges.{k}.component: {r.component} out of range for N={N}")
        if r.component in seen:
            raise ConfigError(f"sweep.ranges.{k}.component: {r.component} repeated")
        seen.add(r.component)
        if not (r.start > 0 and r.stop > 0):
            raise ConfigError(f"sweep.ranges.{k}: rho bounds must be positive")
    return ranges


def rho_grid(cfg: ExperimentConfig) -> list[np.ndarray]:
    """Rectangular rho grid, first range varying slowest."""
    ranges = sweep_ranges(cfg)
    base = np.array(cfg.rho, dtype=float)
    axes = [np.linspace(r.start, r.stop, r.num) for r in ranges]
    out = []
    for combo in itertools.product(*axes):
        rho = base.copy()
        for r, val in zip(ranges, combo):
            rho[r.component] = val
        out.append(rho)
    return out
