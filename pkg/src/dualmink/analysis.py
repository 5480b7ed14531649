"""Density admissibility conditions and a priori estimate verification.

Two differential inequalities on a nonnegative density f control the
curvature bound uniformly in the regularization:

  I.  |grad(f^{1/(n-2)})| <= A  and  Delta(f^{1/(n-2)}) >= -A,
  II. f Delta f - (3-q)/(2-q) |grad f|^2 >= -A f^{2-1/(n-2)}   (q < 2).

This module computes the minimal constants as grid suprema, checks the
additivity property of condition-II-type inequalities under sums, provides
the elementary inequality  sum a_i^2 >= (sum a_i)^2/(n-2)  used in the
curvature estimate, and assembles the a priori report for solver output.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .convex_body import SupportFn
from .sphere_grid import ScalarField, grad_hess_packed

F_CUT = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    A_grad: float | None
    A_lap: float | None
    A_II: float | None
    worst_grad_node: int | None
    worst_lap_node: int | None
    worst_II_node: int | None
    satisfied: bool | None       # against a user-supplied A, if given
    user_A: float | None
    f_cut: float


def _grad_sq_and_lap(f: ScalarField):
    gf, hp = grad_hess_packed(f.grid, f.values)
    grad_sq = np.sum(gf ** 2, axis=1)
    lap = hp[:, 0] if f.grid.dim == 2 else hp[:, 0] + hp[:, 2]
    return grad_sq, lap


def condition_I(f: ScalarField, user_A: float | None = None,
                f_cut: float = F_CUT) -> ConditionReport:
    """Minimal constants for the gradient/Laplacian bounds on f^{1/(n-2)}.

    Only n = 3 is meaningful (the exponent 1/(n-2) is undefined at n = 2),
    where f^{1/(n-2)} = f and the bounds reduce to |grad f| <= A and
    Delta f >= -A.  Nodes with f < f_cut are evaluated through the
    equivalent form |grad f| <= (n-2) A f^{1-1/(n-2)}, which at n = 3
    coincides with the direct formula.
    """
    n = f.grid.dim
    if n != 3:
        raise ValueError(f"condition I requires n = 3 (exponent 1/(n-2)); got n = {n}")
    if np.any(f.values < 0):
        raise ValueError("density must be nonnegative")
    grad_sq, lap = _grad_sq_and_lap(f)
    grad_norm = np.sqrt(grad_sq)
    # for n = 3 the power field equals f itself, so the low-f branch and the
    # direct branch agree; both are kept for the documented contract
    low = f.values < f_cut
    a_grad_nodes = np.where(low, grad_norm / (n - 2), grad_norm)
    a_lap_nodes = np.maximum(0.0, -lap)
    ig = int(np.argmax(a_grad_nodes))
    il = int(np.argmax(a_lap_nodes))
    A_grad = float(a_grad_nodes[ig])
    A_lap = float(a_lap_nodes[il])
    satisfied = None
    if user_A is not None:
        satisfied = bool(A_grad <= user_A and A_lap <= user_A)
    return ConditionReport(A_grad, A_lap, None, ig, il, None, satisfied, user_A, f_cut)


def condition_II(f: ScalarField, q: float, user_A: float | None = None,
                 f_cut: float = F_CUT, zero_tol: float = 1e-5) -> ConditionReport:
    """Minimal constant for f Delta f - (3-q)/(2-q)|grad f|^2 >= -A f^{2-1/(n-2)}.

    Requires q < 2 (the coefficient changes sign at q = 2).  At nodes with
    f <= f_cut the quotient is replaced by the limiting requirement that
    the numerator be >= -zero_tol.  For smooth nonnegative data the true
    numerator vanishes at zeros of f (the gradient does); zero_tol only
    absorbs the squared discrete-gradient noise there, which is O(h^6).
    """
    if q >= 2:
        raise ValueError(f"condition II requires q < 2 (coefficient (3-q)/(2-q)); got q = {q}")
    n = f.grid.dim
    if n != 3:
        raise ValueError(f"condition II requires n = 3; got n = {n}")
    if np.any(f.values < 0):
        raise ValueError("density must be nonnegative")
    grad_sq, lap = _grad_sq_and_lap(f)
    coeff = (3.0 - q) / (2.0 - q)
    numer = f.values * lap - coeff * grad_sq
    power = 2.0 - 1.0 / (n - 2)
    quo = np.zeros(f.grid.num_nodes)
    pos = f.values > f_cut
    quo[pos] = np.maximum(0.0, -numer[pos]) / f.values[pos] ** power
    bad_zero = (~pos) & (numer < -zero_tol)
    if np.any(bad_zero):
        i = int(np.argmin(np.where(~pos, numer, np.inf)))
        raise ValueError(
            f"condition II violated in the limit at a zero of f (node {i}, "
            f"numerator {numer[i]:.3e})")
    iw = int(np.argmax(quo))
    A_II = float(quo[iw])
    satisfied = None if user_A is None else bool(A_II <= user_A)
    return ConditionReport(None, None, A_II, None, None, iw, satisfied, user_A, f_cut)


@dataclass(frozen=True)
class AdditivityResult:
    ok: bool
    worst_node: int
    worst_slack: float
    tol: float

    def __bool__(self) -> bool:
        return self.ok


def additivity_check(f1: ScalarField, f2: ScalarField, a: float, b: float,
                     A: float, tol: float = 1e-8) -> AdditivityResult:
    """Check that f1 + f2 satisfies  a f Dlt f - b|grad f|^2 >= -2A f^{2-1/(n-2)}.

    Holds whenever each summand satisfies the same inequality with constant
    A; a failure therefore signals a discretization artifact, reported with
    the worst node.
    """
    if f1.grid is not f2.grid:
        raise ValueError("summands must live on the same grid")
    n = f1.grid.dim
    if n != 3:
        raise ValueError("additivity check requires n = 3")
    f = ScalarField(f1.grid, f1.values + f2.values)
    grad_sq, lap = _grad_sq_and_lap(f)
    power = 2.0 - 1.0 / (n - 2)
    slack = a * f.values * lap - b * grad_sq + 2.0 * A * f.values ** power
    iw = int(np.argmin(slack))
    return AdditivityResult(bool(slack[iw] >= -tol), iw, float(slack[iw]), tol)


@dataclass(frozen=True)
class AlgebraicInequalityResult:
    lhs: float
    rhs: float
    holds: bool
    hypothesis_met: bool


def algebraic_inequality(a) -> AlgebraicInequalityResult:
    """Evaluate  sum a_i^2 >= (sum a_i)^2 / (n-2)  for n-1 = len(a) values.

    Guaranteed when min(a) <= 0 <= max(a); the hypothesis is reported, and
    the inequality is evaluated either way.  Uses exact rational arithmetic
    when all inputs are ints or Fractions.
    """
    vals = list(a)
    if len(vals) < 2:
        raise ValueError("need at least two values (n - 1 >= 2)")
    exact = all(isinstance(v, (int, Fraction)) for v in vals)
    if exact:
        lhs = sum(Fraction(v) ** 2 for v in vals)
        rhs = Fraction(sum(Fraction(v) for v in vals)) ** 2 / (len(vals) - 1)
        return AlgebraicInequalityResult(float(lhs), float(rhs), lhs >= rhs,
                                         min(vals) <= 0 <= max(vals))
    arr = np.asarray(vals, dtype=float)
    lhs = float(np.sum(arr ** 2))
    rhs = float(np.sum(arr) ** 2 / (len(vals) - 1))
    return AlgebraicInequalityResult(lhs, rhs, lhs >= rhs,
                                     bool(arr.min() <= 0 <= arr.max()))


@dataclass(frozen=True)
class AprioriReport:
    """Quantities bounded by the C^0/C^1/C^2 estimates, for one solve.

    ``c0_lower_bound`` is (max f)^{1/(q-p)}, the bound that follows from
    the minimum-point algebra h^{q-p}(x0) <= max f.  The alternative
    normalization (max f)^{-(p-q)} also circulating in statements of the
    bound is emitted as ``c0_lower_bound_alt``; the two agree iff
    p - q = 1 or max f = 1, and the derived one is the sharper check.
    """

    min_h: float
    c0_lower_bound: float
    c0_lower_bound_alt: float
    c0_lower_ok: bool
    max_h: float
    max_grad: float
    grad_bound_ok: bool
    max_H: float
    psd_margin: float
    tol_c0: float
    tol_grad: float


def apriori_report(h: SupportFn, f: ScalarField, params,
                   tol_c0: float = 1e-8, tol_grad: float = 1e-6) -> AprioriReport:
    """Evaluate the a priori inequalities on a converged solve against f."""
    max_f = float(f.values.max())
    if params.p == params.q:
        bound = float("nan")
        alt = float("nan")
    else:
        bound = max_f ** (1.0 / (params.q - params.p))
        alt = max_f ** (-(params.p - params.q))
    min_h = float(h.values.min())
    max_h = float(h.values.max())
    max_grad = float(np.sqrt(h.grad_sq.max()))
    return AprioriReport(
        min_h=min_h,
        c0_lower_bound=bound,
        c0_lower_bound_alt=alt,
        c0_lower_ok=bool(np.isnan(bound) or min_h >= bound - tol_c0),
        max_h=max_h,
        max_grad=max_grad,
        grad_bound_ok=bool(max_grad <= max_h + tol_grad),
        max_H=float(h.trace_b.max()),
        psd_margin=float(h.min_eig_b.min()),
        tol_c0=tol_c0, tol_grad=tol_grad)
