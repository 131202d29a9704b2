"""The functional J_rho, its gradient and the Euler-Lagrange residual.

A system field is an ``(N, n, n)`` array.  Masses ``int h~_i e^{u_i}`` are carried
as logarithms: with ``s = max(u_i)`` the shifted integral ``int h~_i e^{u_i - s}``
stays representable even when ``max(u)`` exceeds 700.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SingularModel
from .torus import (
    dirichlet_matrix,
    h_minus_1_norm,
    inv_laplacian_zero_mean,
    laplacian,
)


class CorruptFieldError(FloatingPointError):
    pass


def as_system(model: SingularModel, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 2 and model.N == 1:
        u = u[None]
    expected = (model.N,) + model.grid.shape
    if u.shape != expected:
        raise ValueError(f"system field has shape {u.shape}, expected {expected}")
    if not np.all(np.isfinite(u)):
        raise CorruptFieldError("system field has non-finite values")
    return u


def _log_masses(model: SingularModel, u: np.ndarray):
    """Return ``(log_mass, density)`` where density_i = h~_i e^{u_i} / mass_i."""
    h2 = model.grid.h ** 2
    expo = u + model.log_tilde_h
    shift = expo.max(axis=(1, 2))
    w = np.exp(expo - shift[:, None, None])
    shifted = w.sum(axis=(1, 2)) * h2
    if not np.all(np.isfinite(shifted)) or np.any(shifted <= 0):
        raise CorruptFieldError("non-finite mass after shifting")
    log_mass = shift + np.log(shifted)
    return log_mass, w / shifted[:, None, None]


@dataclass
class EnergyReport:
    J: float
    dirichlet_part: float
    entropy_parts: np.ndarray
    log_masses: np.ndarray

    @property
    def masses(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_masses)

    def to_dict(self) -> dict:
        return {
            "J": self.J,
            "dirichlet_part": self.dirichlet_part,
            "entropy_parts": self.entropy_parts.tolist(),
            "log_masses": self.log_masses.tolist(),
        }


def evaluate_J(model: SingularModel, rho, u) -> EnergyReport:
    u = as_system(model, u)
    rho = np.asarray(rho, dtype=float)
    D = dirichlet_matrix(model.grid, u)
    dirichlet = 0.5 * float(np.sum(model.A.a_inv * D))
    log_mass, _ = _log_masses(model, u)
    means = u.mean(axis=(1, 2))
    entropy = rho * (log_mass - means)
    J = dirichlet - float(np.sum(entropy))
    return EnergyReport(J, dirichlet, entropy, log_mass)


def densities(model: SingularModel, u) -> np.ndarray:
    """Probability densities ``h~_i e^{u_i} / int h~_i e^{u_i}``."""
    return _log_masses(model, as_system(model, u))[1]


def l2_gradient(model: SingularModel, rho, u) -> np.ndarray:
    """``g_i = sum_j a^{ij} (-lap u_j) - rho_i (h~_i e^{u_i} / mass_i - 1)``."""
    u = as_system(model, u)
    rho = np.asarray(rho, dtype=float)
    grid = model.grid
    minus_lap = -np.stack([laplacian(grid, c) for c in u])
    dens = densities(model, u)
    return np.einsum("ij,jxy->ixy", model.A.a_inv, minus_lap) - rho[:, None, None] * (dens - 1.0)


def el_residual(model: SingularModel, rho, u) -> np.ndarray:
    """``r_i = -lap u_i - sum_j a_ij rho_j (h~_j e^{u_j} / mass_j - 1)``; equals ``A g``."""
    u = as_system(model, u)
    rho = np.asarray(rho, dtype=float)
    grid = model.grid
    minus_lap = -np.stack([laplacian(grid, c) for c in u])
    dens = densities(model, u)
    return minus_lap - np.einsum("ij,jxy->ixy", model.A.a, rho[:, None, None] * (dens - 1.0))


@dataclass
class ResidualNorms:
    l2: float
    linf: float
    h_minus_1: float

    def to_dict(self) -> dict:
        return {"l2": self.l2, "linf": self.linf, "h_minus_1": self.h_minus_1}


def residual_norms(model: SingularModel, r: np.ndarray) -> ResidualNorms:
    grid = model.grid
    l2 = math.sqrt(float(np.sum(r**2)) * grid.h**2)
    return ResidualNorms(l2, float(np.max(np.abs(r))), h_minus_1_norm(grid, r))


def normalize_v(model: SingularModel, rho, u) -> np.ndarray:
    """``v_i = u_i - log int h~_i e^{u_i} + log rho_i``, so that ``int h~_i e^{v_i} = rho_i``."""
    u = as_system(model, u)
    rho = np.asarray(rho, dtype=float)
    log_mass, _ = _log_masses(model, u)
    return u + (np.log(rho) - log_mass)[:, None, None]


def energy_change(model: SingularModel, rho, u, d, t: float, dens=None) -> float:
    """``J(u + t d) - J(u)`` evaluated without cancellation.

    The Dirichlet part is a quadratic polynomial in ``t``; the entropy part uses
    ``log int p_i e^{t d_i}`` with ``p_i`` the current density, written through
    ``expm1``/``log1p`` so that tiny decrements stay accurate.
    """
    grid = model.grid
    rho = np.asarray(rho, dtype=float)
    if dens is None:
        dens = densities(model, u)
    a_inv = model.A.a_inv
    both = np.concatenate([u, d])
    D = dirichlet_matrix(grid, both)
    N = model.N
    cross = float(np.sum(a_inv * D[:N, N:]))
    dd = float(np.sum(a_inv * D[N:, N:]))
    dirichlet = t * cross + 0.5 * t * t * dd
    h2 = grid.h ** 2
    td = t * d
    top = td.max(axis=(1, 2))
    change = 0.0
    for i in range(N):
        if top[i] < 30.0:
            log_ratio = math.log1p(float(np.sum(dens[i] * np.expm1(td[i]))) * h2)
        else:
            log_ratio = top[i] + math.log(float(np.sum(dens[i] * np.exp(td[i] - top[i]))) * h2)
        change -= rho[i] * (log_ratio - float(td[i].mean()))
    return dirichlet + change


def sobolev_direction(model: SingularModel, rho, u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Steepest-descent direction for the inner product ``sum a^{ij} int grad u_i . grad w_j``.

    Returns ``(direction, l2_gradient, residual)`` with ``direction = -(-lap)^{-1} (A g)``.
    """
    g = l2_gradient(model, rho, u)
    r = np.einsum("ij,jxy->ixy", model.A.a, g)
    d = -np.stack([inv_laplacian_zero_mean(model.grid, c) for c in r])
    return d, g, r
