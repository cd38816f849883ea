"""
Complexity reduction of constrained zonotopes.

`cz_reduce` returns an enclosure with at most `max_cons` constraints and
`max_gens` generators in two stages:

1. constraint elimination: the bounds on xi implied by A xi = b are tightened
   by interval propagation and the factors are rescaled onto them (exact).
   Then one constraint is solved for one xi-variable and substituted out.
   The (constraint, variable) pair is chosen to minimise how far the
   eliminated variable can leave [-1, 1], weighted by the length of its
   column in [G; A]. Constraints are eliminated until the limits hold, or
   until few enough remain for the merge step to have room.
2. generator reduction: [G; A] is read as the generator matrix of a zonotope
   one dimension per constraint taller; the columns that lose least when
   boxed are merged into an axis-aligned box and the result is split back
   into (G, A). Constraint rows are weighted onto the scale of G when the
   columns are ranked.

Ties always go to the lowest index so runs are reproducible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .conzono import ConstrainedZonotope, cz_hull
from .errors import EmptySetError
from .utils import PIVOT_TOL, PROPAGATION_SWEEPS

logger = logging.getLogger(__name__)

# relative size below which a constraint coefficient is not used as a pivot
RELATIVE_PIVOT_TOL = 1e-8
# outward slack on propagated bounds before rescaling
RESCALE_SLACK = 1e-9


@dataclass(frozen=True)
class ReductionLimits:
    """Upper bounds on generators and constraints; None means unlimited"""

    max_gens: Optional[int] = None
    max_cons: Optional[int] = None

    def satisfied_by(self, Z: ConstrainedZonotope) -> bool:
        gens_ok = self.max_gens is None or Z.n_g <= self.max_gens
        cons_ok = self.max_cons is None or Z.n_c <= self.max_cons
        return gens_ok and cons_ok


def implied_bounds(A: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Interval of xi_j implied by row i of A xi = b when every other variable
    ranges over [lo, hi]. Returns (R_lo, R_hi), each of shape A.shape, with
    infinite entries where A_ij = 0.
    """
    P = A * lo[None, :]
    Q = A * hi[None, :]
    cmin = np.minimum(P, Q)
    cmax = np.maximum(P, Q)
    rest_min = cmin.sum(axis=1)[:, None] - cmin
    rest_max = cmax.sum(axis=1)[:, None] - cmax
    num_lo = b[:, None] - rest_max
    num_hi = b[:, None] - rest_min
    usable = np.abs(A) > PIVOT_TOL
    safe = np.where(usable, A, 1.0)
    q1 = num_lo / safe
    q2 = num_hi / safe
    R_lo = np.where(usable, np.minimum(q1, q2), -np.inf)
    R_hi = np.where(usable, np.maximum(q1, q2), np.inf)
    return R_lo, R_hi


def propagate_bounds(A: np.ndarray, b: np.ndarray, sweeps: int = PROPAGATION_SWEEPS) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    Tighten [-1, 1] bounds on xi using the rows of A xi = b.

    Returns:
        (lo, hi, empty): the bounds and whether propagation proved the
        constraints infeasible (in which case the bounds are the last valid
        ones)
    """
    n = A.shape[1]
    lo = -np.ones(n)
    hi = np.ones(n)
    if A.shape[0] == 0 or n == 0:
        return lo, hi, False
    for _ in range(sweeps):
        R_lo, R_hi = implied_bounds(A, b, lo, hi)
        new_lo = np.maximum(lo, R_lo.max(axis=0))
        new_hi = np.minimum(hi, R_hi.min(axis=0))
        if np.any(new_lo > new_hi + 1e-9):
            return lo, hi, True
        new_lo = np.minimum(new_lo, new_hi)
        change = max(np.abs(new_lo - lo).max(), np.abs(new_hi - hi).max())
        lo, hi = new_lo, new_hi
        if change <= 1e-12:
            break
    return lo, hi, False


def rescale(Z: ConstrainedZonotope, lo: np.ndarray, hi: np.ndarray) -> ConstrainedZonotope:
    """
    Substitute xi = m + r * xi' where [lo, hi] = [m - r, m + r] holds for
    every feasible xi. The set is unchanged.
    """
    m = 0.5 * (lo + hi)
    r = 0.5 * (hi - lo)
    return ConstrainedZonotope(Z.G * r, Z.c + Z.G @ m, Z.A * r, Z.b - Z.A @ m)


def drop_trivial(Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """Remove zero generators and constraint rows without coefficients"""
    G, A, b = Z.G, Z.A, Z.b
    live_cols = (np.abs(G).sum(axis=0) + np.abs(A).sum(axis=0)) > 0.0
    G, A = G[:, live_cols], A[:, live_cols]
    live_rows = np.abs(A).max(axis=1, initial=0.0) > PIVOT_TOL
    if np.any(~live_rows & (np.abs(b) > 1e-9)):
        logger.debug("dropping a constraint row 0 = b with b != 0; the set was empty")
    return ConstrainedZonotope(G, Z.c, A[live_rows], b[live_rows])


def _substitute(Z: ConstrainedZonotope, i: int, j: int) -> ConstrainedZonotope:
    """Solve row i for xi_j, substitute everywhere, drop row i and column j"""
    A, b, G = Z.A, Z.b, Z.G
    row = A[i] / A[i, j]
    beta = b[i] / A[i, j]
    g_j = G[:, j].copy()
    a_j = A[:, j].copy()
    G = G - np.outer(g_j, row)
    c = Z.c + g_j * beta
    A = A - np.outer(a_j, row)
    b = b - a_j * beta
    keep_rows = np.arange(A.shape[0]) != i
    keep_cols = np.arange(A.shape[1]) != j
    return ConstrainedZonotope(G[:, keep_cols], c, A[keep_rows][:, keep_cols], b[keep_rows])


def _row_weights(G: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Per constraint row, the factor that brings its largest entry to the largest entry of G"""
    g_scale = np.abs(G).max(initial=0.0) or 1.0
    row_max = np.abs(A).max(axis=1, initial=0.0)
    return np.where(row_max > 0.0, g_scale / np.where(row_max > 0.0, row_max, 1.0), 1.0)


def lifted_columns(Z: ConstrainedZonotope) -> np.ndarray:
    """[G; W A] with each constraint row of A weighted onto the scale of G"""
    return np.vstack([Z.G, Z.A * _row_weights(Z.G, Z.A)[:, None]])


def eliminate_constraint(Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """
    Remove one constraint (and one generator), returning an enclosure of Z.
    """
    Z = drop_trivial(Z)
    if Z.n_c == 0:
        return Z
    lo, hi, empty = propagate_bounds(Z.A, Z.b)
    if not empty:
        lo = np.maximum(lo - RESCALE_SLACK, -1.0)
        hi = np.minimum(hi + RESCALE_SLACK, 1.0)
        Z = drop_trivial(rescale(Z, lo, hi))
        if Z.n_c == 0:
            return Z

    A = Z.A
    ones = np.ones(Z.n_g)
    R_lo, R_hi = implied_bounds(A, Z.b, -ones, ones)
    row_scale = np.abs(A).max(axis=1, keepdims=True)
    relative = np.abs(A) / row_scale
    pivotable = relative > RELATIVE_PIVOT_TOL
    excess = np.maximum(np.maximum(np.abs(R_lo), np.abs(R_hi)) - 1.0, 0.0)
    finite = pivotable & np.isfinite(excess)
    if finite.any():
        weight = np.linalg.norm(lifted_columns(Z), axis=0)[None, :]
        cost = np.where(finite, np.where(finite, excess, 0.0) * weight, np.inf)
        best = cost.min()
        # among the cheapest pivots take the largest relative coefficient
        near = cost <= best + 1e-12 * (1.0 + best)
        score = np.where(near, relative, -np.inf)
    else:
        # only pivots with unbounded growth remain; fall back to the largest coefficient
        score = np.where(pivotable, relative, -np.inf)
    i, j = np.unravel_index(int(np.argmax(score)), score.shape)
    return _substitute(Z, int(i), int(j))


def reduce_generators(Z: ConstrainedZonotope, max_gens: int) -> ConstrainedZonotope:
    """
    Merge columns of [G; A] into a box so that at most `max_gens` generators
    remain. Needs max_gens >= Z.dim + Z.n_c. Columns are ranked by
    |col|_1 - |col|_inf of the weighted lifted matrix, so nearly axis-aligned
    and short columns go first.
    """
    if Z.n_g <= max_gens:
        return Z
    n = Z.dim
    box_rows = n + Z.n_c
    keep = max_gens - box_rows
    assert keep >= 0, f"cannot reduce to {max_gens} generators with {box_rows} rows in the lifted set"

    W = lifted_columns(Z)
    score = np.abs(W).sum(axis=0) - np.abs(W).max(axis=0, initial=0.0)
    order = np.argsort(score, kind="stable")
    merged = order[: Z.n_g - keep]
    kept = np.sort(order[Z.n_g - keep :])
    L = np.vstack([Z.G, Z.A])
    radii = np.abs(L[:, merged]).sum(axis=1)
    nonzero = radii > 0.0
    box = np.diag(radii)[:, nonzero]
    L = np.hstack([L[:, kept], box])
    return ConstrainedZonotope(L[:n], Z.c, L[n:], Z.b)


def hull_box(Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """The interval hull of Z as a zonotope; the unconstrained box if Z is empty"""
    try:
        box = cz_hull(Z)
    except EmptySetError:
        logger.warning("reduction of an empty set: using the unconstrained box")
        box = Z.box()
    return ConstrainedZonotope.from_interval(box)


def _needs_elimination(Z: ConstrainedZonotope, max_gens: Optional[int]) -> bool:
    """
    Whether another constraint should go before any generators are merged.
    Eliminating alone reaches the limit when n_g - n_c <= max_gens. Otherwise
    constraints go until the merge box (one row per dimension and constraint)
    takes at most half of the generator budget.
    """
    if max_gens is None or Z.n_g <= max_gens:
        return False
    return Z.n_g - Z.n_c <= max_gens or Z.dim + Z.n_c > max_gens // 2


def cz_reduce(Z: ConstrainedZonotope, max_gens: Optional[int], max_cons: Optional[int]) -> ConstrainedZonotope:
    """
    Enclose Z with at most `max_gens` generators and `max_cons` constraints.

    Args:
        Z: the set to reduce
        max_gens: generator limit (>= Z.dim), None for no limit
        max_cons: constraint limit (>= 0), None for no limit

    Returns:
        Z itself when it is already within the limits, else a new enclosure
    """
    limits = ReductionLimits(max_gens, max_cons)
    if limits.satisfied_by(Z):
        return Z
    n = Z.dim
    assert max_gens is None or max_gens >= n, f"max_gens must be at least the dimension {n}"
    assert max_cons is None or max_cons >= 0, "max_cons must be nonnegative"

    if max_gens is not None and max_gens == n:
        return hull_box(Z)

    cons_limit = np.inf if max_cons is None else max_cons
    try:
        while Z.n_c > 0 and (Z.n_c > cons_limit or _needs_elimination(Z, max_gens)):
            Z = eliminate_constraint(Z)
        if max_gens is not None:
            Z = reduce_generators(Z, max_gens)
    except np.linalg.LinAlgError:
        logger.warning("reduction failed numerically: using the interval hull")
        return hull_box(Z)
    logger.debug("reduced to n_g=%d n_c=%d", Z.n_g, Z.n_c)
    return Z
