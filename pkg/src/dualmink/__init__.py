"""Numerical laboratory for the L_p dual Minkowski problem on S^1 and S^2.

Solves  h^{1-p} (|grad h|^2 + h^2)^{-(n-q)/2} det(hess h + h I) = f
for the support function h of a convex body, including the eps-regularized
continuation f + eps -> f for degenerate (nonnegative, vanishing) densities,
and verifies the support/radial duality identities and a priori bounds that
constrain the solutions.
"""

from .equation import ProblemParams
from .solver import LadderConfig, SolverOptions, continuation_ladder, default_init, newton_solve
from .sphere_grid import Grid, ScalarField, build_grid, integrate, symmetrize_even

__all__ = [
    "Grid",
    "ScalarField",
    "build_grid",
    "integrate",
    "symmetrize_even",
    "ProblemParams",
    "SolverOptions",
    "LadderConfig",
    "newton_solve",
    "continuation_ladder",
    "default_init",
]

__version__ = "0.1.0"
