"""
Linear programs over the unit box with equality constraints:

    minimize  cost @ xi   subject to  A xi = b,  -1 <= xi <= 1

This is the only LP shape constrained-zonotope queries need (interval hulls and
point membership). Solved with a dense bounded-variable revised simplex in two
phases, one artificial variable per row. The basis is factorized afresh at
every iteration, the leaving row comes from a Harris ratio test with a
relative pivot threshold, and the entering column from Dantzig pricing until a
run of degenerate pivots switches the phase to Bland's rule.

Every reported point is checked against the original rows before it is
returned: a solve whose point fails the check is repeated with a stricter
pivot threshold and then reported as a SolverError, never as optimal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import InputError, ShapeError, SolverError
from .utils import FEASIBILITY_TOL, PIVOT_TOL, as_matrix, as_vector

logger = logging.getLogger(__name__)

OPTIMALITY_TOL = 1e-10
# rows whose largest coefficient is below this are read as 0 = b
ZERO_ROW_TOL = 1e-12
# relative pivot thresholds, one solve attempt each
RELATIVE_PIVOT_TOLS = (1e-7, 1e-4)
# a diagonal entry of U this small relative to the largest marks a singular basis
SINGULAR_TOL = 1e-14
# steps shorter than this count as degenerate
DEGENERATE_STEP = 1e-12
DEGENERATE_RUN = 50
# an artificial stays basic if its row of B^-1 N has no entry above this
DRIVE_OUT_TOL = 1e-7


@dataclass(frozen=True)
class BoxEqualityLP:
    """
    Problem data. `A` has shape (n_c, n_g); both `A` and `b` may be empty.

    Raises:
        ShapeError: inconsistent dimensions
        InputError: NaN or infinite entries
    """

    cost: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        cost = as_vector(self.cost, "cost")
        A = as_matrix(self.A, cost.shape[0], "A")
        b = as_vector(self.b, "b") if np.size(self.b) else np.zeros(0)
        if A.shape[1] != cost.shape[0]:
            raise ShapeError(f"A has {A.shape[1]} columns, cost has {cost.shape[0]} entries")
        if A.shape[0] != b.shape[0]:
            raise ShapeError(f"A has {A.shape[0]} rows, b has {b.shape[0]} entries")
        for name, arr in (("cost", cost), ("A", A), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise InputError(f"LP {name} contains NaN or infinite entries")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n_g(self) -> int:
        return self.cost.shape[0]

    @property
    def n_c(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class LPResult:
    """
    Attributes:
        status: 'optimal' or 'infeasible'
        value: optimal objective value
        argmin: an optimal point
        duals: equality multipliers; b @ duals - |cost - A.T @ duals|_1 is a
            lower bound on the optimum and equals it at optimality
        iterations: simplex iterations over both phases
    """

    status: str
    value: float = float("nan")
    argmin: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


def dual_bound(problem: BoxEqualityLP, duals: np.ndarray) -> float:
    """Weak-duality lower bound for any multiplier vector"""
    reduced = problem.cost - problem.A.T @ duals
    return float(problem.b @ duals - np.abs(reduced).sum())


class _NumericalTrouble(Exception):
    pass


class BoundedSimplex:
    """
    Dense bounded-variable revised simplex.

    Rows are scaled to a largest coefficient of 1 and rows without
    coefficients are checked and dropped. Variables are shifted to
    x = xi + 1 in [0, 2]; rows with a negative right hand side are negated so
    an identity block of artificials gives the first basis. Phase 1 minimizes
    the artificials, phase 2 the cost with the artificials pinned at 0.

    An instance keeps mutable workspace between calls, so share problems, not
    solvers, across threads.
    """

    def __init__(self, feas_tol: float = FEASIBILITY_TOL, pivot_tol: float = PIVOT_TOL):
        self.feas_tol = feas_tol
        self.pivot_tol = pivot_tol
        self.iterations = 0

    # workspace ---------------------------------------------------------------

    def _setup(self, A: np.ndarray, b: np.ndarray) -> bool:
        """Build the phase 1 basis. False when a row reads 0 = b with b != 0."""
        n = A.shape[1]
        scale = np.abs(A).max(axis=1, initial=0.0)
        live = scale > ZERO_ROW_TOL
        self._b_tol = self.feas_tol * (1.0 + np.abs(b).max(initial=0.0))
        self.iterations = 0
        if np.any(np.abs(b[~live]) > self._b_tol):
            return False

        A = A[live] / scale[live, None]
        b = b[live] / scale[live]
        m = A.shape[0]
        rhs = b + A.sum(axis=1)
        sign = np.where(rhs < 0.0, -1.0, 1.0)
        self._n = n
        self._m = m
        self._live = live
        self._scale = scale[live]
        self._row_factor = sign / self._scale
        self._M = np.hstack([A * sign[:, None], np.eye(m)])
        self._rhs = rhs * sign
        self._upper = np.concatenate([np.full(n, 2.0), np.full(m, np.inf)])
        self._basis = np.arange(n, n + m)
        self._at_upper = np.zeros(n + m, dtype=bool)
        self._max_iter = 50 * (n + m) + 1000
        return True

    def _factor(self):
        B = self._M[:, self._basis]
        lu, piv = linalg.lu_factor(B, check_finite=False)
        diag = np.abs(np.diag(lu))
        if diag.size and diag.min() <= SINGULAR_TOL * max(1.0, diag.max()):
            raise _NumericalTrouble("singular basis")
        return lu, piv

    def _values(self, lu) -> np.ndarray:
        """All variables: nonbasic ones at their bound, basic ones solved for"""
        x = np.where(self._at_upper, self._upper, 0.0)
        x[self._basis] = 0.0
        x[self._basis] = linalg.lu_solve(lu, self._rhs - self._M @ x, check_finite=False)
        return x

    def _ratio_test(self, xB: np.ndarray, g: np.ndarray, flip: float, pivot_rel: float, bland: bool):
        """
        Leaving row r and step length for xB(t) = xB - t g, or r = -1 when the
        entering variable reaches its other bound first.
        """
        ub = self._upper[self._basis]
        tol = max(self.pivot_tol, pivot_rel * np.abs(g).max(initial=0.0))
        dec = g > tol
        inc = (g < -tol) & np.isfinite(ub)
        slack = np.full(g.shape, np.inf)
        slack[dec] = xB[dec]
        slack[inc] = ub[inc] - xB[inc]
        step = np.ones(g.shape)
        step[dec | inc] = np.abs(g[dec | inc])
        exact = np.maximum(slack / step, 0.0)

        if bland:
            bound = exact.min(initial=np.inf)
            if flip <= bound:
                return -1, flip
            ties = np.flatnonzero(exact <= bound + 1e-12 * (1.0 + bound))
            r = ties[np.argmin(self._basis[ties])]
            return int(r), float(exact[r])

        bound = np.maximum((slack + 0.5 * self.feas_tol) / step, 0.0).min(initial=np.inf)
        if flip <= bound:
            return -1, flip
        rows = np.flatnonzero(exact <= bound)
        r = rows[np.argmax(np.abs(g[rows]))]
        return int(r), float(exact[r])

    def _run(self, cost: np.ndarray, allowed: np.ndarray, pivot_rel: float):
        opt_tol = OPTIMALITY_TOL * (1.0 + np.abs(cost).max(initial=0.0))
        degenerate = 0
        bland = False
        while True:
            if self.iterations >= self._max_iter:
                logger.warning("LP iteration cap reached (%d)", self._max_iter)
                raise SolverError(f"simplex did not terminate within {self._max_iter} iterations")

            lu = self._factor()
            x = self._values(lu)
            y = linalg.lu_solve(lu, cost[self._basis], trans=1, check_finite=False)
            d = cost - y @ self._M
            movable = allowed & (self._upper > 0.0)
            movable[self._basis] = False
            improving = movable & np.where(self._at_upper, d > opt_tol, d < -opt_tol)
            candidates = np.flatnonzero(improving)
            if candidates.size == 0:
                return
            self.iterations += 1

            j = candidates[0] if bland else candidates[np.argmax(np.abs(d[candidates]))]
            direction = -1.0 if self._at_upper[j] else 1.0
            g = direction * linalg.lu_solve(lu, self._M[:, j], check_finite=False)
            r, theta = self._ratio_test(x[self._basis], g, self._upper[j], pivot_rel, bland)
            if not np.isfinite(theta):
                raise SolverError("unbounded direction in a box-bounded LP")

            degenerate = degenerate + 1 if theta <= DEGENERATE_STEP else 0
            if degenerate >= DEGENERATE_RUN and not bland:
                logger.debug("LP: %d degenerate pivots, switching to Bland's rule", degenerate)
                bland = True

            if r < 0:
                self._at_upper[j] = not self._at_upper[j]
            else:
                leaving = self._basis[r]
                self._at_upper[leaving] = bool(g[r] < 0.0)
                self._basis[r] = j
                self._at_upper[j] = False

    def _check(self, x: np.ndarray):
        """Bounds and rows of the original problem, in its own units"""
        n = self._n
        structural = x[:n]
        violation = max(np.maximum(-structural, 0.0).max(initial=0.0), np.maximum(structural - 2.0, 0.0).max(initial=0.0))
        residual = (np.abs(self._M[:, :n] @ structural - self._rhs) * self._scale).max(initial=0.0)
        if violation > self.feas_tol or residual > self._b_tol:
            raise _NumericalTrouble(f"point off the feasible set: bound violation {violation:.3g}, residual {residual:.3g}")

    def _phase_one(self, pivot_rel: float) -> bool:
        n, m = self._n, self._m
        cost = np.concatenate([np.zeros(n), np.ones(m)])
        # artificials never re-enter once they leave the basis
        allowed = np.zeros(n + m, dtype=bool)
        allowed[:n] = True
        self._run(cost, allowed, pivot_rel)
        x = self._values(self._factor())
        if np.max(x[n:] * self._scale, initial=0.0) > self._b_tol:
            return False
        self._check(x)
        return True

    def _drive_out_artificials(self):
        n, m = self._n, self._m
        for r in range(m):
            if self._basis[r] < n:
                continue
            lu = self._factor()
            e = np.zeros(m)
            e[r] = 1.0
            row = linalg.lu_solve(lu, e, trans=1, check_finite=False) @ self._M[:, :n]
            row[self._basis[self._basis < n]] = 0.0
            j = int(np.argmax(np.abs(row))) if n else 0
            if n and abs(row[j]) > DRIVE_OUT_TOL:
                self._basis[r] = j
                self._at_upper[j] = False

    def _feasible_once(self, A: np.ndarray, b: np.ndarray, pivot_rel: float) -> bool:
        if not self._setup(A, b):
            return False
        if self._m == 0:
            return True
        return self._phase_one(pivot_rel)

    def _solve_once(self, problem: BoxEqualityLP, pivot_rel: float) -> LPResult:
        c = problem.cost
        if not self._setup(problem.A, problem.b):
            return LPResult("infeasible")
        n, m = self._n, self._m
        if m == 0:
            xi = np.where(c > 0.0, -1.0, np.where(c < 0.0, 1.0, 0.0))
            return LPResult("optimal", float(c @ xi), xi, np.zeros(problem.n_c), 0)

        if not self._phase_one(pivot_rel):
            return LPResult("infeasible", iterations=self.iterations)

        self._upper[n:] = 0.0
        self._drive_out_artificials()
        allowed = np.zeros(n + m, dtype=bool)
        allowed[:n] = True
        cost = np.concatenate([c, np.zeros(m)])
        self._run(cost, allowed, pivot_rel)

        lu = self._factor()
        x = self._values(lu)
        self._check(x)
        y = linalg.lu_solve(lu, cost[self._basis], trans=1, check_finite=False)
        duals = np.zeros(problem.n_c)
        duals[self._live] = y * self._row_factor

        xi = np.clip(x[:n] - 1.0, -1.0, 1.0)
        logger.debug("LP solved: n_g=%d n_c=%d iterations=%d", n, m, self.iterations)
        return LPResult("optimal", float(c @ xi), xi, duals, self.iterations)

    def _attempts(self, fn, *args):
        trouble = None
        for pivot_rel in RELATIVE_PIVOT_TOLS:
            try:
                return fn(*args, pivot_rel)
            except _NumericalTrouble as e:
                logger.debug("LP attempt with relative pivot threshold %g failed: %s", pivot_rel, e)
                trouble = e
        raise SolverError(f"LP failed its feasibility check: {trouble}")

    # public ------------------------------------------------------------------

    def feasible(self, A: np.ndarray, b: np.ndarray) -> bool:
        """
        True iff {xi in [-1,1]^n : A xi = b} is nonempty (to tolerance)

        Raises:
            SolverError: no attempt produced a point that passes the check
        """
        problem = BoxEqualityLP(np.zeros(np.shape(A)[1] if np.ndim(A) == 2 else 0), A, b)
        if problem.n_c == 0:
            return True
        return self._attempts(self._feasible_once, problem.A, problem.b)

    def solve(self, problem: BoxEqualityLP) -> LPResult:
        """
        Raises:
            SolverError: no attempt produced a point that passes the check
        """
        return self._attempts(self._solve_once, problem)


def lp_solve(problem: BoxEqualityLP) -> LPResult:
    """Solve with a fresh solver instance"""
    return BoundedSimplex().solve(problem)


def lp_feasible(A, b) -> bool:
    """True iff some xi with |xi|_inf <= 1 satisfies A xi = b, to FEASIBILITY_TOL"""
    return BoundedSimplex().feasible(np.atleast_2d(np.asarray(A, dtype=float)), b)
