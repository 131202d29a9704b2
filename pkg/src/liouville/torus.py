"""Flat unit torus [0,1)^2: cell-centred grid and exact-spectrum operators.

Scalar fields are plain ``(n, n)`` float arrays indexed ``[i, j]`` with node
coordinates ``((i + 1/2) h, (j + 1/2) h)``.  All spectral operators use the
DFT band of the grid; the Nyquist row/column is kept everywhere so that
``laplacian``, ``dirichlet_inner`` and ``inv_laplacian_zero_mean`` are exactly
consistent with each other.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

FOUR_PI_SQ = 4.0 * math.pi**2


@dataclass(frozen=True)
class Point:
    """A point of the torus; coordinates are reduced modulo 1 on construction."""

    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", _wrap(self.x))
        object.__setattr__(self, "y", _wrap(self.y))

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def _wrap(c: float) -> float:
    c = float(c) % 1.0
    # -1e-20 % 1.0 == 1.0 in floating point
    return 0.0 if c >= 1.0 else c


def as_point(p) -> Point:
    if isinstance(p, Point):
        return p
    x, y = p
    return Point(x, y)


def torus_distance(p, q) -> float:
    """Minimum Euclidean distance over the 9 periodic images of ``q``."""
    p, q = as_point(p), as_point(q)
    # images of the absolute differences keep the result exactly symmetric
    dx, dy = abs(p.x - q.x), abs(p.y - q.y)
    return min(math.hypot(dx + sx, dy + sy) for sx, sy in itertools.product((-1, 0, 1), repeat=2))


@dataclass(frozen=True)
class TorusGrid:
    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise TypeError(f"grid size must be an integer, got {n!r}")
        if n < 32 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 32, got {n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @cached_property
    def coords(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n

    @cached_property
    def freqs(self) -> np.ndarray:
        """Integer frequencies in FFT order."""
        return np.rint(np.fft.fftfreq(self.n, d=1.0 / self.n))

    @cached_property
    def ksq(self) -> np.ndarray:
        k = self.freqs
        return k[:, None] ** 2 + k[None, :] ** 2

    @cached_property
    def _inv_symbol(self) -> np.ndarray:
        # 1 / (4 pi^2 |k|^2), zero on the mean mode
        with np.errstate(divide="ignore"):
            s = 1.0 / (FOUR_PI_SQ * self.ksq)
        s[0, 0] = 0.0
        return s

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def constant(self, c: float) -> np.ndarray:
        return np.full(self.shape, float(c))

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.coords, self.coords, indexing="ij")

    def node_point(self, i: int, j: int) -> Point:
        return Point(self.coords[i % self.n], self.coords[j % self.n])

    def nearest_node(self, p) -> tuple[int, int]:
        p = as_point(p)
        i = int(math.floor(p.x * self.n)) % self.n
        j = int(math.floor(p.y * self.n)) % self.n
        return i, j

    def distance_to(self, p) -> np.ndarray:
        """Torus distance from every node to ``p``."""
        p = as_point(p)
        dx = np.abs(self.coords - p.x)
        dy = np.abs(self.coords - p.y)
        dx = np.minimum(dx, 1.0 - dx)
        dy = np.minimum(dy, 1.0 - dy)
        return np.hypot(dx[:, None], dy[None, :])

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-2:] != self.shape:
            raise ValueError(f"field of shape {u.shape} does not live on a {self.n}x{self.n} grid")
        return u


def integrate(grid: TorusGrid, u: np.ndarray) -> float:
    """Midpoint quadrature; since the area is 1 this is also the mean."""
    return float(grid.check(u).sum() * grid.h**2)


def laplacian(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    u = grid.check(u)
    return np.fft.ifft2(-FOUR_PI_SQ * grid.ksq * np.fft.fft2(u)).real


def inv_laplacian_zero_mean(grid: TorusGrid, f: np.ndarray) -> np.ndarray:
    """Solve ``-lap u = f - mean(f)`` with ``mean(u) = 0``."""
    f = grid.check(f)
    return np.fft.ifft2(grid._inv_symbol * np.fft.fft2(f)).real


def _dirichlet_hat(grid: TorusGrid, U: np.ndarray, V: np.ndarray) -> float:
    # Parseval on the unit-area torus: int u v = sum U conj(V) / n^4
    return float(FOUR_PI_SQ * np.sum(grid.ksq * (U * V.conj()).real) / grid.n**4)


def dirichlet_inner(grid: TorusGrid, u: np.ndarray, v: np.ndarray) -> float:
    """``int grad u . grad v`` via the spectral Parseval sum."""
    u, v = grid.check(u), grid.check(v)
    if u.shape != v.shape:
        raise ValueError(f"grid mismatch: {u.shape} vs {v.shape}")
    return _dirichlet_hat(grid, np.fft.fft2(u), np.fft.fft2(v))


def dirichlet_matrix(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    """Gram matrix ``D[i, j] = int grad u_i . grad u_j`` for a stacked field."""
    u = grid.check(u)
    U = np.fft.fft2(u, axes=(-2, -1))
    w = grid.ksq * (FOUR_PI_SQ / grid.n**4)
    flat = U.reshape(U.shape[0], -1)
    D = ((flat * w.ravel()) @ flat.conj().T).real
    return 0.5 * (D + D.T)


def green_function(grid: TorusGrid, p) -> np.ndarray:
    """Band-limited Green function of ``-lap`` with pole at ``p``, sampled at the nodes.

    G(x) = Re sum_{k != 0} exp(2 pi i k.(x - p)) / (4 pi^2 |k|^2), the sum running
    over the grid band.  It has zero mean and solves ``-lap G = delta_p - 1`` for the
    band-limited delta.
    """
    p = as_point(p)
    k = grid.freqs
    # cell-centred nodes sit half a cell off the DFT sample points
    phase = np.exp(2j * np.pi * (k[:, None] * (0.5 * grid.h - p.x) + k[None, :] * (0.5 * grid.h - p.y)))
    coeff = grid._inv_symbol * phase
    return (np.fft.ifft2(coeff) * grid.n**2).real


def h_minus_1_norm(grid: TorusGrid, r: np.ndarray) -> float:
    """``||grad (-lap)^{-1} r||_{L^2}``, summed in quadrature over stacked components."""
    r = grid.check(r)
    R = np.fft.fft2(r, axes=(-2, -1))
    val = np.sum(grid._inv_symbol * np.abs(R) ** 2) / grid.n**4
    return float(math.sqrt(max(val, 0.0)))
