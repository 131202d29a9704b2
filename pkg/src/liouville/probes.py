"""Non-compactness probes: the log-cutoff test functions, concentration masses and blow-up detection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .criterion import lambda_subset_at
from .energy import as_system
from .model import SingularModel, alpha_vector
from .torus import Point, TorusGrid, as_point, dirichlet_inner, integrate

FOUR_PI = 4.0 * math.pi
PLATEAU_TOL = 0.02
DEFAULT_BLOWUP_THRESHOLD = 5.0


class ResolutionError(ValueError):
    pass


def check_resolution(grid: TorusGrid, lam: float) -> None:
    if not lam > 1:
        raise ResolutionError(f"lambda must exceed 1, got {lam}")
    if lam > grid.n / 8:
        raise ResolutionError(f"lambda={lam} exceeds the resolution limit n/8={grid.n / 8:g}")


def phi_component(grid: TorusGrid, x, lam: float, alpha: float = 0.0) -> np.ndarray:
    """``-2 (1 + alpha) log max{1, lam d(., x)}``."""
    check_resolution(grid, lam)
    d = grid.distance_to(x)
    return -2.0 * (1.0 + alpha) * np.log(np.maximum(1.0, lam * d))


def _fit(xs, ys):
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    slope, intercept = np.polyfit(xs, ys, 1)
    dev = float(np.max(np.abs(ys - (slope * xs + intercept))))
    return float(slope), float(intercept), dev


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    max_deviation: float
    expected: float

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.expected) / abs(self.expected)

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "max_deviation": self.max_deviation, "expected": self.expected}


@dataclass
class PhiAsymptotics:
    dirichlet: SlopeFit
    mean: SlopeFit
    lambdas: list[float]
    dirichlet_values: list[float]
    mean_values: list[float]


def phi_asymptotics_check(grid: TorusGrid, x, alpha_i: float, alpha_j: float, lambdas) -> PhiAsymptotics:
    """Regress ``int grad phi_i . grad phi_j`` and ``mean(phi_i)`` against ``log lambda``."""
    lambdas = [float(l) for l in lambdas]
    if len(lambdas) < 3:
        raise ValueError("need at least 3 lambda values")
    for lam in lambdas:
        check_resolution(grid, lam)
    dvals, mvals = [], []
    for lam in lambdas:
        pi_ = phi_component(grid, x, lam, alpha_i)
        pj = phi_component(grid, x, lam, alpha_j)
        dvals.append(dirichlet_inner(grid, pi_, pj))
        mvals.append(integrate(grid, pi_))
    logs = np.log(lambdas)
    dfit = SlopeFit(*_fit(logs, dvals), expected=8 * math.pi * (1 + alpha_i) * (1 + alpha_j))
    mfit = SlopeFit(*_fit(logs, mvals), expected=-2.0 * (1 + alpha_i))
    return PhiAsymptotics(dfit, mfit, lambdas, dvals, mvals)


def u_lambda_family(model: SingularModel, rho, I, x, lam: float) -> np.ndarray:
    """``u_i = sum_{j in I} a_ij rho_j / (4 pi (1 + alpha_j(x))) phi_j^{lam,x}`` for every i."""
    grid = model.grid
    I = sorted(set(I))
    if not I:
        raise ValueError("subset must be nonempty")
    rho = np.asarray(rho, dtype=float)
    d = grid.distance_to(x)
    check_resolution(grid, lam)
    base = -2.0 * np.log(np.maximum(1.0, lam * d))
    # phi_j = (1 + alpha_j) * base, so the (1 + alpha_j) factors cancel exactly
    coeff = model.A.a[:, I] @ rho[I] / FOUR_PI
    return coeff[:, None, None] * base[None]


def blowup_slope(model: SingularModel, rho, I, x, lambdas):
    """Evaluate ``J(u^lambda)`` over ``lambdas`` and regress against ``log lambda``.

    The expected slope is ``Lambda_{I,x}(rho) / (4 pi)``: negative exactly when the
    family drives the energy to minus infinity.
    """
    from .energy import evaluate_J

    lambdas = [float(l) for l in lambdas]
    if len(lambdas) < 2:
        raise ValueError("need at least 2 lambda values")
    for lam in lambdas:
        check_resolution(model.grid, lam)
    Js = [evaluate_J(model, rho, u_lambda_family(model, rho, I, x, lam)).J for lam in lambdas]
    lam_ix = lambda_subset_at(model, rho, I, x)
    fit = SlopeFit(*_fit(np.log(lambdas), Js), expected=lam_ix / FOUR_PI)
    return fit, Js, lam_ix


def joint_threshold(model: SingularModel, i: int) -> float:
    """``4 pi min{1, 1 + min_{j,m} alpha_jm} / sum_j a_ij^+``."""
    amin = float(model.alphas.min()) if model.M else 0.0
    pos = float(np.sum(np.maximum(model.A.a[i], 0.0)))
    return FOUR_PI * min(1.0, 1.0 + amin) / pos


def single_threshold(model: SingularModel, i: int) -> float:
    """``4 pi min{1, 1 + min_m alpha_im} / a_ii``."""
    amin = float(model.alphas[i].min()) if model.M else 0.0
    return FOUR_PI * min(1.0, 1.0 + amin) / float(model.A.a[i, i])


def default_radii(grid: TorusGrid, r_max: float = 0.25) -> list[float]:
    """Geometric radii ``r_max / sqrt(2)^k`` down to the 4h floor."""
    radii = []
    r = r_max
    while r >= 4 * grid.h:
        radii.append(r)
        r /= math.sqrt(2.0)
    return radii


@dataclass
class ConcentrationReport:
    """Finite-radius surrogate for the concentration values at ``x``.

    ``sigma`` is read off the mass-versus-radius table; ``converged[i]`` is False when
    no radius pair stabilizes, in which case ``sigma[i]`` is the mass at the smallest radius.
    """

    x: Point
    radii: list[float]
    masses: np.ndarray
    sigma: np.ndarray
    converged: list[bool]
    sigma_joint_threshold: np.ndarray
    sigma_single_threshold: np.ndarray
    pohozaev_residual: float

    def to_dict(self) -> dict:
        return {
            "x": list(self.x.as_tuple()),
            "radii": list(self.radii),
            "masses": self.masses.tolist(),
            "sigma": self.sigma.tolist(),
            "sigma_converged": list(self.converged),
            "sigma_joint_threshold": self.sigma_joint_threshold.tolist(),
            "sigma_single_threshold": self.sigma_single_threshold.tolist(),
            "pohozaev_residual": self.pohozaev_residual,
            "sigma_is_finite_radius_surrogate": True,
        }


def ball_masses(model: SingularModel, v: np.ndarray, x, radii) -> np.ndarray:
    """``masses[i, k] = int_{B_{r_k}(x)} h~_i e^{v_i}``."""
    grid = model.grid
    d = grid.distance_to(x)
    dens = np.exp(v + model.log_tilde_h) * grid.h**2
    return np.array([[float(dens[i][d < r].sum()) for r in radii] for i in range(model.N)])


def plateau_sigma(masses_i: np.ndarray) -> tuple[float, bool]:
    """Scan from the smallest radius up; return the mass at the first radius that agrees
    with its next-smaller neighbour to 2%."""
    for k in range(len(masses_i) - 2, -1, -1):
        big, small = masses_i[k], masses_i[k + 1]
        if big > 0 and abs(big - small) < PLATEAU_TOL * big:
            return float(big), True
    return float(masses_i[-1]), False


def estimate_sigma(model: SingularModel, rho, v, x, radii=None) -> ConcentrationReport:
    grid = model.grid
    v = as_system(model, v)
    x = as_point(x)
    radii = default_radii(grid) if radii is None else [float(r) for r in radii]
    if not radii:
        raise ValueError("need at least one radius")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    if radii[-1] < 4 * grid.h:
        raise ResolutionError(f"radius {radii[-1]} is below the 4h floor {4 * grid.h:g}")
    masses = ball_masses(model, v, x, radii)
    sig, conv = zip(*(plateau_sigma(masses[i]) for i in range(model.N)))
    sigma = np.array(sig)
    return ConcentrationReport(
        x=x,
        radii=radii,
        masses=masses,
        sigma=sigma,
        converged=list(conv),
        sigma_joint_threshold=np.array([joint_threshold(model, i) for i in range(model.N)]),
        sigma_single_threshold=np.array([single_threshold(model, i) for i in range(model.N)]),
        pohozaev_residual=pohozaev_check(model, sigma, x),
    )


def pohozaev_check(model: SingularModel, sigma, x) -> float:
    """``Lambda_{{1..N},x}(sigma)``, which vanishes for genuine concentration values."""
    return lambda_subset_at(model, sigma, range(model.N), x)


def synthetic_bubble(grid: TorusGrid, x, lam: float, mass: float = 8 * math.pi) -> np.ndarray:
    """Planar Liouville bubble ``8 lam^2 / (1 + lam^2 d^2)^2`` in the torus distance, log-scaled
    so that ``int e^v = mass``."""
    d = grid.distance_to(x)
    v = math.log(8 * lam * lam) - 2.0 * np.log1p((lam * d) ** 2)
    return v + math.log(mass) - math.log(integrate(grid, np.exp(v)))


def detect_blowup_set(grid: TorusGrid, fields, threshold: float = DEFAULT_BLOWUP_THRESHOLD) -> list[list[Point]]:
    """Per component, points where the last field exceeds the first field's maximum by ``threshold``.

    Nodes above the level are grouped by single linkage at distance ``8h`` (periodically);
    each group is reported by its highest node, strongest group first.  A diagnostic, not
    a proof of blow-up.
    """
    fields = [np.asarray(f, dtype=float) for f in fields]
    if len(fields) < 2:
        raise ValueError("need at least two fields")
    fields = [f[None] if f.ndim == 2 else f for f in fields]
    first, last = fields[0], fields[-1]
    out = []
    for i in range(last.shape[0]):
        vals = last[i]
        mask = vals > float(first[i].max()) + threshold
        labels = _link_clusters(mask, LINK_CELLS)
        peaks = []
        for lab in np.unique(labels[mask]):
            members = np.argwhere(labels == lab)
            best = members[np.argmax(vals[members[:, 0], members[:, 1]])]
            peaks.append((float(vals[best[0], best[1]]), grid.node_point(*best)))
        peaks.sort(key=lambda t: -t[0])
        out.append([p for _, p in peaks])
    return out


LINK_CELLS = 8


def _link_clusters(mask: np.ndarray, radius: int) -> np.ndarray:
    """Periodic single-linkage labels: nodes of ``mask`` closer than ``radius`` cells share a label."""
    big = mask.size
    labels = np.where(mask, np.arange(big).reshape(mask.shape), big)
    offsets = [(a, b) for a in range(-radius + 1, radius) for b in range(-radius + 1, radius)
               if 0 < a * a + b * b < radius * radius]
    while True:
        prev = labels
        for a, b in offsets:
            labels = np.minimum(labels, np.roll(prev, (a, b), axis=(0, 1)))
        labels = np.where(mask, labels, big)
        if np.array_equal(labels, prev):
            return labels
