"""Variational toolkit for singular Liouville systems on the flat unit torus."""

from .criterion import LambdaReport, lambda_min, lambda_subset_at, rho_critical
from .energy import el_residual, evaluate_J, normalize_v
from .minimizer import SolverOptions, continuation, minimize
from .model import CouplingMatrix, SingularModel, SingularSource, alpha_at, tilde_alpha
from .torus import Point, TorusGrid

__all__ = [
    "CouplingMatrix",
    "LambdaReport",
    "Point",
    "SingularModel",
    "SingularSource",
    "SolverOptions",
    "TorusGrid",
    "alpha_at",
    "continuation",
    "el_residual",
    "evaluate_J",
    "lambda_min",
    "lambda_subset_at",
    "minimize",
    "normalize_v",
    "rho_critical",
    "tilde_alpha",
]
