"""Command-line front end.

    liouville {classify,minimize,sweep,blowup-slope,pohozaev} --config cfg.json [--out DIR] [--jobs K] [--seed S]

Exit codes: 0 success, 2 config error, 3 non-convergence, 4 expected unboundedness,
5 numeric corruption.  Set LIOUVILLE_LOG to a logging level name to change verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, rho_grid
from .criterion import lambda_min, rho_critical, sharp_hypothesis
from .energy import CorruptFieldError, normalize_v
from .fieldio import read_field, write_field
from .minimizer import (
    CONVERGED,
    EXPECTED_UNBOUNDEDNESS,
    DiscretizationFailure,
    continuation,
    minimize,
)
from .model import SingularModel
from .probes import ResolutionError, blowup_slope, estimate_sigma, synthetic_bubble
from .torus import Point

log = logging.getLogger("liouville")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_UNBOUNDED = 4
EXIT_NUMERIC = 5


class NumericCorruption(RuntimeError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise NumericCorruption(f"non-finite value {x} in output")
        return format(float(x), ".17g")
    return str(x)


def _check_finite(obj, where="report"):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{where}.{k}")
    elif isinstance(obj, (list, tuple)):
        for k, v in enumerate(obj):
            _check_finite(v, f"{where}[{k}]")
    elif isinstance(obj, float) and not math.isfinite(obj):
        raise NumericCorruption(f"non-finite value at {where}")


def write_json(path: Path, obj: dict) -> None:
    _check_finite(obj)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def _point_label(p: Point | None) -> str:
    return "generic" if p is None else f"{fmt(p.x)};{fmt(p.y)}"


def generic_point(model: SingularModel) -> Point:
    """The node farthest from every source (the centre when there are none)."""
    if not model.sources:
        return Point(0.5, 0.5)
    grid = model.grid
    dmin = np.min([grid.distance_to(s.p) for s in model.sources], axis=0)
    return grid.node_point(*np.unravel_index(np.argmax(dmin), grid.shape))


# --- commands ---------------------------------------------------------------


def cmd_classify(cfg: ExperimentConfig, out: Path, args) -> int:
    model = cfg.build_model()
    report = lambda_min(model, cfg.rho)
    result = {"config": cfg.effective(), "report": report.to_dict()}
    print(f"Lambda(rho) = {report.value:.12g}")
    print(f"argmin subset = {list(report.subset)}, point = {report.point_label}")
    print(f"classification: {report.classification}")
    if report.note:
        print(f"note: {report.note}")
    if sharp_hypothesis(model):
        rho0 = rho_critical(model)
        bounded = report.value >= -report.eps
        result["sharp"] = {"rho_critical": rho0.tolist(), "bounded_below": bool(bounded)}
        print(f"rho_critical = {rho0.tolist()}")
        print("off-diagonal coupling <= 0: J is " + ("bounded below" if bounded else "unbounded below"))
    write_json(out / "classify.json", result)
    return EXIT_OK


def cmd_minimize(cfg: ExperimentConfig, out: Path, args) -> int:
    model = cfg.build_model()
    rng = np.random.default_rng(args.seed)
    try:
        res = minimize(model, cfg.rho, cfg.minimize["init"], cfg.solver_options(), rng)
    except DiscretizationFailure as exc:
        log.error("discretization failure: %s", exc)
        write_json(out / "minimize.json", {"config": cfg.effective(), "status": "discretization_failure",
                                           "message": str(exc)})
        return EXIT_NUMERIC
    summary = res.summary()
    summary["config"] = cfg.effective()
    summary["seed"] = args.seed
    write_json(out / "minimize.json", summary)
    rows = [[k, J, r] for k, (J, r) in enumerate(zip(res.J_trace, res.residual_trace))]
    write_csv(out / "trace.csv", ["iteration", "J", "residual_h_minus_1"], rows)
    write_field(out / "u_star.liou", res.u_star)
    print(f"status: {res.status} after {res.iterations} iterations; J = {res.energy_report.J:.12g}, "
          f"H^-1 residual = {res.residual_h_minus_1:.3e}")
    if res.status == CONVERGED:
        return EXIT_OK
    if res.status == EXPECTED_UNBOUNDEDNESS:
        return EXIT_UNBOUNDED
    return EXIT_NOT_CONVERGED


def _sweep_row(job):
    cfg, idx, rho, seed = job
    model = cfg.build_model()
    report = lambda_min(model, rho)
    row = [idx, *rho.tolist(), report.value, report.classification,
           ";".join(str(i) for i in report.subset), _point_label(report.point)]
    if cfg.sweep["minimize"]:
        try:
            res = minimize(model, rho, cfg.minimize["init"], cfg.solver_options(),
                           np.random.default_rng([seed, idx]))
            row += [res.energy_report.J, res.status]
        except DiscretizationFailure:
            row += ["", "discretization_failure"]
    return row


def cmd_sweep(cfg: ExperimentConfig, out: Path, args) -> int:
    grid = rho_grid(cfg)
    jobs = [(cfg, k, rho, args.seed) for k, rho in enumerate(grid)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    rows.sort(key=lambda r: r[0])
    N = len(cfg.rho)
    header = ["index", *[f"rho_{i}" for i in range(N)], "lambda", "classification", "argmin_subset", "argmin_point"]
    if cfg.sweep["minimize"]:
        header += ["min_J", "status"]
    write_csv(out / "sweep.csv", header, rows)
    counts = {}
    for r in rows:
        counts[r[N + 2]] = counts.get(r[N + 2], 0) + 1
    print(f"{len(rows)} grid nodes: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def cmd_blowup_slope(cfg: ExperimentConfig, out: Path, args) -> int:
    model = cfg.build_model()
    block = cfg.blowup
    report = lambda_min(model, cfg.rho)
    subset = block.get("subset") or list(report.subset)
    if any(i >= model.N for i in subset):
        raise ConfigError(f"blowup.subset: indices must be < {model.N}")
    if block.get("point") is not None:
        x = Point(*block["point"])
    else:
        x = report.point if report.point is not None else generic_point(model)
    lambdas = block.get("lambdas") or []
    if len(lambdas) < 2:
        raise ConfigError("blowup.lambdas: need at least 2 values")
    try:
        fit, Js, lam_ix = blowup_slope(model, cfg.rho, subset, x, lambdas)
    except ResolutionError as exc:
        raise ConfigError(f"blowup.lambdas: {exc}") from exc
    rows = [[lam, math.log(lam), J] for lam, J in zip(lambdas, Js)]
    write_csv(out / "blowup_slope.csv", ["lambda", "log_lambda", "J"], rows)
    summary = {
        "config": cfg.effective(),
        "subset": list(subset),
        "point": list(x.as_tuple()),
        "lambda_subset": lam_ix,
        "fit": fit.to_dict(),
        "relative_error": fit.relative_error,
    }
    write_json(out / "blowup_slope.json", summary)
    print(f"slope of J(u^lambda) vs log lambda: {fit.slope:.6g}; "
          f"Lambda_I,x(rho)/(4 pi) = {fit.expected:.6g} (relative error {fit.relative_error:.3%})")
    return EXIT_OK


def _pohozaev_field(cfg: ExperimentConfig, model: SingularModel, rho: np.ndarray, args) -> np.ndarray:
    block = cfg.pohozaev
    kind = block["field"]
    grid = model.grid
    if kind == "bubble":
        bubble = synthetic_bubble(grid, block["bubble_center"], float(block["bubble_lambda"]))
        # h~_i e^{v_i} is the bubble density rescaled to mass rho_i
        v = np.stack([bubble + math.log(r / (8 * math.pi)) for r in rho]) - model.log_tilde_h
        return v
    if kind == "zero":
        return normalize_v(model, rho, np.zeros((model.N,) + grid.shape))
    if kind == "continuation":
        steps = int(block["continuation_steps"])
        seq = [(1 - 2.0 ** -k) * rho for k in range(1, steps + 1)]
        results = continuation(model, seq, cfg.solver_options())
        last = next((r for r in reversed(results) if r is not None), None)
        if last is None:
            raise NumericCorruption("every continuation step failed")
        return normalize_v(model, seq[-1], last.u_star)
    path = block.get("path")
    if not path:
        raise ConfigError("pohozaev.path: required when field is 'file'")
    p = Path(path) if Path(path).is_absolute() else cfg.base_dir / path
    try:
        u = read_field(p)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"pohozaev.path: {exc}") from exc
    return normalize_v(model, rho, u)


def cmd_pohozaev(cfg: ExperimentConfig, out: Path, args) -> int:
    model = cfg.build_model()
    rho = np.array(cfg.rho)
    block = cfg.pohozaev
    v = _pohozaev_field(cfg, model, rho, args)
    if block.get("point") is not None:
        x = Point(*block["point"])
    elif block["field"] == "bubble":
        x = Point(*block["bubble_center"])
    elif model.sources:
        x = model.sources[0].p
    else:
        x = Point(0.5, 0.5)
    try:
        rep = estimate_sigma(model, rho, v, x, block.get("radii"))
    except ResolutionError as exc:
        raise ConfigError(f"pohozaev.radii: {exc}") from exc
    result = rep.to_dict()
    result["config"] = cfg.effective()
    write_json(out / "pohozaev.json", result)
    print(f"sigma = {rep.sigma.tolist()} (plateau found: {rep.converged})")
    print(f"Pohozaev residual Lambda_(1..N),x(sigma) = {rep.pohozaev_residual:.6g}")
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "minimize": cmd_minimize,
    "sweep": cmd_sweep,
    "blowup-slope": cmd_blowup_slope,
    "pohozaev": cmd_pohozaev,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liouville", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    parser.add_argument("--seed", type=int, default=0, help="seed for random initial fields")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("LIOUVILLE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericCorruption, CorruptFieldError, FloatingPointError, OverflowError) as exc:
        print(f"numeric corruption: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
