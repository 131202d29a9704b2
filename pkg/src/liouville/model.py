"""Problem data: coupling matrix, conical sources and the singular weights."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .torus import Point, TorusGrid, as_point, green_function, torus_distance

MAX_COMPONENTS = 16
COINCIDENCE_TOL = 1e-12
EXPONENT_LIMIT = 700.0


class NotPositiveDefiniteError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    a: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {a.shape}")
        if not 1 <= a.shape[0] <= MAX_COMPONENTS:
            raise ValueError(f"number of components must be in [1, {MAX_COMPONENTS}], got {a.shape[0]}")
        if not np.all(np.isfinite(a)):
            raise ValueError("coupling matrix has non-finite entries")
        if np.max(np.abs(a - a.T)) > 1e-12:
            raise ValueError("coupling matrix is not symmetric")
        a = 0.5 * (a + a.T)
        min_eig = float(np.linalg.eigvalsh(a)[0])
        if min_eig <= 0:
            raise NotPositiveDefiniteError(
                f"coupling matrix is not positive definite (smallest eigenvalue {min_eig:.6g})"
            )
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "min_eig", min_eig)

    @property
    def N(self) -> int:
        return self.a.shape[0]

    @cached_property
    def a_inv(self) -> np.ndarray:
        inv = np.linalg.inv(self.a)
        inv = 0.5 * (inv + inv.T)
        inv.setflags(write=False)
        return inv

    @property
    def off_diagonal_nonpositive(self) -> bool:
        off = self.a - np.diag(np.diag(self.a))
        return bool(np.all(off <= 0))


@dataclass(frozen=True, eq=False)
class SingularSource:
    p: Point
    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", as_point(self.p))
        alpha = np.atleast_1d(np.array(self.alpha, dtype=float))
        if alpha.ndim != 1:
            raise ValueError("source coefficients must be a vector")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= -1):
            raise ValueError(f"source coefficients must be finite and > -1, got {alpha.tolist()}")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True, eq=False)
class SingularModel:
    """Coupling matrix, sources ``(p_m, alpha_{.m})`` and smooth weights ``h_i`` on a grid.

    ``h`` defaults to the constant 1; otherwise an ``(N, n, n)`` positive array.
    """

    A: CouplingMatrix
    grid: TorusGrid
    sources: tuple[SingularSource, ...] = ()
    h: np.ndarray | None = field(default=None)

    def __post_init__(self):
        A = self.A if isinstance(self.A, CouplingMatrix) else CouplingMatrix(self.A)
        object.__setattr__(self, "A", A)
        sources = tuple(
            s if isinstance(s, SingularSource) else SingularSource(*s) for s in self.sources
        )
        for m, s in enumerate(sources):
            if s.alpha.shape != (A.N,):
                raise ValueError(f"source {m}: expected {A.N} coefficients, got {s.alpha.shape[0]}")
            for l in range(m):
                if torus_distance(s.p, sources[l].p) < COINCIDENCE_TOL:
                    raise ValueError(f"sources {l} and {m} coincide")
        object.__setattr__(self, "sources", sources)
        if self.h is not None:
            h = np.array(self.h, dtype=float)
            if h.shape == self.grid.shape:
                h = np.broadcast_to(h, (A.N,) + h.shape).copy()
            if h.shape != (A.N,) + self.grid.shape:
                raise ValueError(f"weights have shape {h.shape}, expected {(A.N,) + self.grid.shape}")
            if not np.all(np.isfinite(h)) or np.any(h <= 0):
                raise ValueError("weights h_i must be finite and strictly positive")
            h.setflags(write=False)
            object.__setattr__(self, "h", h)

    @property
    def N(self) -> int:
        return self.A.N

    @property
    def M(self) -> int:
        return len(self.sources)

    @property
    def alphas(self) -> np.ndarray:
        """``(N, M)`` array of source coefficients."""
        if not self.sources:
            return np.zeros((self.N, 0))
        return np.stack([s.alpha for s in self.sources], axis=1)

    @cached_property
    def log_tilde_h(self) -> np.ndarray:
        return build_log_tilde_h(self)

    @cached_property
    def tilde_h(self) -> np.ndarray:
        th = np.exp(self.log_tilde_h)
        th.setflags(write=False)
        return th


def alpha_at(model: SingularModel, i: int, x) -> float:
    x = as_point(x)
    for s in model.sources:
        if torus_distance(s.p, x) < COINCIDENCE_TOL:
            return float(s.alpha[i])
    return 0.0


def alpha_vector(model: SingularModel, x) -> np.ndarray:
    """``(alpha_1(x), ..., alpha_N(x))``; ``x=None`` stands for a generic point."""
    if x is None:
        return np.zeros(model.N)
    return np.array([alpha_at(model, i, x) for i in range(model.N)])


def tilde_alpha(model: SingularModel, i: int) -> float:
    return float(min([0.0] + [s.alpha[i] for s in model.sources]))


def build_log_tilde_h(model: SingularModel) -> np.ndarray:
    """``log h_i - 4 pi sum_m alpha_im G_{p_m}`` at every node, shape ``(N, n, n)``.

    The band-limited Green function is finite at the poles, so no clamping is needed.
    """
    grid = model.grid
    N = model.N
    log_h = np.zeros((N,) + grid.shape) if model.h is None else np.log(model.h)
    if not model.sources:
        out = log_h.copy()
        out.setflags(write=False)
        return out
    greens = np.stack([green_function(grid, s.p) for s in model.sources])
    contrib = -4.0 * math.pi * np.einsum("im,mxy->imxy", model.alphas, greens)
    expo = log_h + contrib.sum(axis=1)
    if np.max(expo) > EXPONENT_LIMIT:
        i, x, y = np.unravel_index(np.argmax(expo), expo.shape)
        m = int(np.argmax(contrib[i, :, x, y]))
        raise OverflowError(
            f"singular weight exponent {expo[i, x, y]:.1f} exceeds {EXPONENT_LIMIT:g} "
            f"for component {i} near source {m} at {model.sources[m].p.as_tuple()}"
        )
    expo.setflags(write=False)
    return expo


def build_tilde_h(model: SingularModel) -> np.ndarray:
    return model.tilde_h
