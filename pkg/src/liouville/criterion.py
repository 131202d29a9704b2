"""Coercivity criterion: the quadratic forms Lambda_{I,x}(rho) and their minimum."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import SingularModel, alpha_vector, tilde_alpha
from .torus import Point

EIGHT_PI = 8.0 * math.pi

COERCIVE = "coercive"
CRITICAL = "critical"
UNBOUNDED = "unbounded"

CRITICAL_NOTE = (
    "Lambda(rho) = 0: bounded below is only guaranteed when all off-diagonal "
    "coupling entries are <= 0"
)


def check_rho(model: SingularModel, rho) -> np.ndarray:
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if rho.shape != (model.N,):
        raise ValueError(f"rho must have {model.N} entries, got {rho.shape[0]}")
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        raise ValueError(f"rho must be finite and positive, got {rho.tolist()}")
    return rho


def subsets(N: int):
    """Nonempty subsets of range(N) by cardinality, then lexicographically."""
    for size in range(1, N + 1):
        yield from itertools.combinations(range(N), size)


def candidate_points(model: SingularModel) -> list[Point | None]:
    """The sources in order, then ``None`` for a generic point (all alpha_i = 0)."""
    return [s.p for s in model.sources] + [None]


def _lambda(a: np.ndarray, alpha: np.ndarray, rho: np.ndarray, idx) -> float:
    idx = list(idx)
    r = rho[idx]
    linear = EIGHT_PI * float(np.dot(1.0 + alpha[idx], r))
    quad = float(r @ a[np.ix_(idx, idx)] @ r)
    return linear - quad


def lambda_subset_at(model: SingularModel, rho, I, x) -> float:
    """``8 pi sum_{i in I} (1 + alpha_i(x)) rho_i - sum_{i,j in I} a_ij rho_i rho_j``.

    ``rho`` may contain zeros here (it is reused for concentration values).
    """
    I = tuple(sorted(set(I)))
    if not I:
        raise ValueError("subset must be nonempty")
    rho = np.asarray(rho, dtype=float)
    return _lambda(model.A.a, alpha_vector(model, x), rho, I)


def critical_band(model: SingularModel, rho: np.ndarray) -> float:
    a_norm = float(np.max(np.sum(np.abs(model.A.a), axis=1)))
    max_alpha = float(np.max(np.abs(model.alphas))) if model.M else 0.0
    return 1e-9 * (1.0 + a_norm * float(rho @ rho) + EIGHT_PI * (1.0 + max_alpha) * float(np.sum(np.abs(rho))))


@dataclass
class LambdaReport:
    value: float
    subset: tuple[int, ...]
    point: Point | None
    classification: str
    eps: float
    rho: np.ndarray
    table: list[tuple[tuple[int, ...], Point | None, float]] | None = field(default=None, repr=False)
    note: str = ""

    @property
    def point_label(self):
        return "generic" if self.point is None else list(self.point.as_tuple())

    def to_dict(self) -> dict:
        return {
            "lambda": self.value,
            "argmin_subset": list(self.subset),
            "argmin_point": self.point_label,
            "classification": self.classification,
            "eps_lambda": self.eps,
            "rho": self.rho.tolist(),
            "note": self.note,
        }


def classify(value: float, eps: float) -> str:
    if value > eps:
        return COERCIVE
    if value < -eps:
        return UNBOUNDED
    return CRITICAL


def lambda_min(model: SingularModel, rho, with_table: bool = False) -> LambdaReport:
    rho = check_rho(model, rho)
    a = model.A.a
    points = candidate_points(model)
    alphas = [alpha_vector(model, x) for x in points]
    best = None
    table = [] if with_table else None
    for I in subsets(model.N):
        for x, alpha in zip(points, alphas):
            val = _lambda(a, alpha, rho, I)
            if table is not None:
                table.append((I, x, val))
            if best is None or val < best[0]:
                best = (val, I, x)
    val, I, x = best
    eps = critical_band(model, rho)
    cls = classify(val, eps)
    note = ""
    if cls == CRITICAL and not model.A.off_diagonal_nonpositive:
        note = CRITICAL_NOTE
    return LambdaReport(val, I, x, cls, eps, rho, table, note)


def sharp_hypothesis(model: SingularModel) -> bool:
    """Whether every off-diagonal coupling entry is <= 0."""
    return model.A.off_diagonal_nonpositive


def rho_critical(model: SingularModel) -> np.ndarray:
    """``rho0_i = 8 pi (1 + tilde_alpha_i) / a_ii``; needs non-positive off-diagonal coupling."""
    if not sharp_hypothesis(model):
        raise ValueError(
            "critical vector needs a_ij <= 0 for all i != j; the coupling matrix has positive "
            "off-diagonal entries"
        )
    diag = np.diag(model.A.a)
    return np.array([EIGHT_PI * (1.0 + tilde_alpha(model, i)) / diag[i] for i in range(model.N)])


def classify_region_sweep(model: SingularModel, rho_grid) -> list[LambdaReport]:
    return [lambda_min(model, rho) for rho in rho_grid]
