"""Sobolev-preconditioned descent for J_rho on zero-mean fields, and continuation in rho."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .criterion import UNBOUNDED, LambdaReport, check_rho, lambda_min
from .energy import (
    EnergyReport,
    as_system,
    densities,
    energy_change,
    evaluate_J,
    residual_norms,
    sobolev_direction,
)
from .model import SingularModel
from .probes import single_threshold
from .torus import dirichlet_inner

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERS = "max_iters"
STALLED = "stalled"
EXPECTED_UNBOUNDEDNESS = "expected_unboundedness"

ENERGY_FLOOR_FACTOR = 1e6
MIN_STEP = 1e-14


class DiscretizationFailure(RuntimeError):
    pass


@dataclass
class SolverOptions:
    max_iters: int = 5000
    tol_h_minus_1: float = 1e-8
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    record_trace: bool = True

    def __post_init__(self):
        if self.tol_h_minus_1 <= 0:
            raise ValueError("tol_h_minus_1 must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")


@dataclass
class MinimizeResult:
    u_star: np.ndarray
    J_trace: list[float]
    residual_h_minus_1: float
    iterations: int
    converged: bool
    energy_report: EnergyReport
    status: str
    lambda_report: LambdaReport
    message: str = ""
    residual_trace: list[float] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "status": self.status,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_h_minus_1": self.residual_h_minus_1,
            "J": self.energy_report.J,
            "energy": self.energy_report.to_dict(),
            "lambda": self.lambda_report.to_dict(),
            "message": self.message,
        }


def random_smooth_field(model: SingularModel, rng: np.random.Generator, kmax: int = 4) -> np.ndarray:
    """Band-limited noise on the modes ``0 < |k| <= kmax``, scaled to unit H^1 seminorm per component."""
    grid = model.grid
    X, Y = grid.mesh()
    ks = [(k1, k2) for k1 in range(-kmax, kmax + 1) for k2 in range(0, kmax + 1)
          if (k2 > 0 or k1 > 0) and k1 * k1 + k2 * k2 <= kmax * kmax]
    out = np.zeros((model.N,) + grid.shape)
    for i in range(model.N):
        for k1, k2 in ks:
            a, b = rng.standard_normal(2)
            arg = 2 * math.pi * (k1 * X + k2 * Y)
            out[i] += a * np.cos(arg) + b * np.sin(arg)
        out[i] /= math.sqrt(dirichlet_inner(grid, out[i], out[i]))
    return out


def initial_field(model: SingularModel, init, rng=None) -> np.ndarray:
    if isinstance(init, str):
        if init == "zero":
            return np.zeros((model.N,) + model.grid.shape)
        if init == "random":
            return random_smooth_field(model, rng if rng is not None else np.random.default_rng())
        raise ValueError(f"unknown init {init!r}")
    u = as_system(model, init).copy()
    return u - u.mean(axis=(1, 2), keepdims=True)


def resolution_floor_hit(model: SingularModel, rho, u: np.ndarray) -> bool:
    """True once some component packs ``sigma'_i`` of mass into ``B_{8h}`` around its peak.

    ``sigma'_i`` is half of a quantized bubble ``8 pi (1 + alpha) / a_ii``; a bubble of scale
    ``1/lambda`` holds half its mass within ``1/lambda``, so this fires when ``lambda`` reaches
    n/8, the finest scale the grid resolves.
    """
    grid = model.grid
    dens = densities(model, u)
    h2 = grid.h ** 2
    for i in range(model.N):
        peak = np.unravel_index(np.argmax(dens[i]), grid.shape)
        ball = grid.distance_to(grid.node_point(*peak)) < 8 * grid.h
        if rho[i] * float(dens[i][ball].sum()) * h2 >= single_threshold(model, i):
            return True
    return False


def minimize(model: SingularModel, rho, init="zero", opts: SolverOptions | None = None, rng=None) -> MinimizeResult:
    opts = opts or SolverOptions()
    rho = check_rho(model, rho)
    report = lambda_min(model, rho)
    unbounded = report.classification == UNBOUNDED
    if report.classification != "coercive":
        log.warning("Lambda(rho) = %.6g (%s): minimizer existence is not guaranteed",
                    report.value, report.classification)
    grid = model.grid
    u = initial_field(model, init, rng)
    J = evaluate_J(model, rho, u).J
    floor = -ENERGY_FLOOR_FACTOR * (1.0 + abs(J))
    trace = [J]
    res_trace = []
    status, message = MAX_ITERS, ""
    it = 0
    res = math.inf
    while True:
        d, g, r = sobolev_direction(model, rho, u)
        res = residual_norms(model, r).h_minus_1
        res_trace.append(res)
        if res <= opts.tol_h_minus_1:
            status = CONVERGED
            break
        if it >= opts.max_iters:
            break
        slope = float(np.sum(g * d)) * grid.h ** 2
        if slope >= 0:
            status, message = STALLED, "direction is not a descent direction"
            break
        dens = densities(model, u)
        t = opts.initial_step
        while True:
            dJ = energy_change(model, rho, u, d, t, dens)
            if dJ <= opts.armijo_c * t * slope:
                break
            t *= opts.backtrack_factor
            if t < MIN_STEP:
                break
        if t < MIN_STEP:
            status, message = STALLED, "line search failed"
            break
        u = u + t * d
        u -= u.mean(axis=(1, 2), keepdims=True)
        J = J + dJ
        trace.append(J)
        it += 1
        if J < floor:
            if unbounded:
                status, message = EXPECTED_UNBOUNDEDNESS, f"energy floor {floor:.3g} reached"
                break
            raise DiscretizationFailure(
                f"J dropped below {floor:.3g} although Lambda(rho) = {report.value:.6g} is not negative"
            )
        if unbounded and resolution_floor_hit(model, rho, u):
            status, message = EXPECTED_UNBOUNDEDNESS, "concentration reached the grid scale"
            break
    energy = evaluate_J(model, rho, u)
    return MinimizeResult(
        u_star=u,
        J_trace=trace if opts.record_trace else [trace[0], trace[-1]],
        residual_h_minus_1=res,
        iterations=it,
        converged=status == CONVERGED,
        energy_report=energy,
        status=status,
        lambda_report=report,
        message=message,
        residual_trace=res_trace,
    )


def continuation(model: SingularModel, rho_sequence, opts: SolverOptions | None = None, init="zero",
                 rng=None) -> list[MinimizeResult]:
    """Warm-started minimizations along a componentwise strictly increasing sequence of rho."""
    rhos = [check_rho(model, r) for r in rho_sequence]
    for prev, cur in zip(rhos, rhos[1:]):
        if not np.all(cur > prev):
            raise ValueError("continuation needs a componentwise strictly increasing rho sequence")
    results = []
    start = init
    for rho in rhos:
        try:
            res = minimize(model, rho, start, opts, rng)
        except DiscretizationFailure as exc:
            log.error("continuation step at rho=%s failed: %s", rho.tolist(), exc)
            results.append(None)
            continue
        log.info("rho=%s J=%.10g status=%s iters=%d", rho.tolist(), res.energy_report.J,
                 res.status, res.iterations)
        results.append(res)
        start = res.u_star
    return results
