"""
Constrained zonotopes

    Z = {c + G xi : |xi|_inf <= 1, A xi = b}

and the operations the estimator is built from: Cartesian product, linear
image, Minkowski sum, generalized intersection, intersection with an
H-polytope, interval hull and point membership. All set operations are exact
and closed form. Only the hull and membership queries solve LPs.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptySetError, ShapeError
from .interval import IntervalVector
from .lp import BoundedSimplex, BoxEqualityLP
from .polytope import HPolytope
from .utils import CONTAINMENT_TOL, block_diag


class ConstrainedZonotope:
    """
    Generator representation (G, c, A, b).

    Attributes:
        G: generator matrix, shape (n, n_g)
        c: center, shape (n,)
        A: constraint matrix, shape (n_c, n_g)
        b: constraint vector, shape (n_c,)

    A zonotope is the n_c = 0 case. Instances are treated as immutable.
    """

    __slots__ = ("G", "c", "A", "b")
    __array_ufunc__ = None

    def __init__(self, G, c, A=None, b=None):
        c = np.asarray(c, dtype=float).reshape(-1)
        G = np.asarray(G, dtype=float)
        if G.ndim != 2:
            G = G.reshape(c.shape[0], -1) if G.size else np.zeros((c.shape[0], 0))
        if G.shape[0] != c.shape[0]:
            raise ShapeError(f"G must have {c.shape[0]} rows, got shape {G.shape}")
        n_g = G.shape[1]
        if A is None:
            A = np.zeros((0, n_g))
            b = np.zeros(0)
        else:
            b = np.asarray(b, dtype=float).reshape(-1)
            A = np.asarray(A, dtype=float)
            if A.ndim != 2:
                A = A.reshape(1, -1) if A.size else np.zeros((b.shape[0], n_g))
        if A.shape[1] != n_g:
            raise ShapeError(f"A must have {n_g} columns, got shape {A.shape}")
        if A.shape[0] != b.shape[0]:
            raise ShapeError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        self.G = G
        self.c = c
        self.A = A
        self.b = b

    @classmethod
    def zonotope(cls, G, c) -> ConstrainedZonotope:
        return cls(G, c)

    @classmethod
    def from_interval(cls, box: IntervalVector) -> ConstrainedZonotope:
        """The box as (diag(rad), mid); zero-radius components keep their column"""
        return cls(np.diag(box.rad), box.mid)

    @classmethod
    def point(cls, c) -> ConstrainedZonotope:
        c = np.asarray(c, dtype=float).reshape(-1)
        return cls(np.zeros((c.shape[0], 0)), c)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def n_g(self) -> int:
        return self.G.shape[1]

    @property
    def n_c(self) -> int:
        return self.A.shape[0]

    @property
    def is_zonotope(self) -> bool:
        return self.n_c == 0

    def box(self) -> IntervalVector:
        """Interval hull of the zonotope obtained by dropping the constraints"""
        r = np.abs(self.G).sum(axis=1)
        return IntervalVector(self.c - r, self.c + r)

    def hull(self) -> IntervalVector:
        return cz_hull(self)

    def contains(self, x, tol: float = CONTAINMENT_TOL) -> bool:
        return cz_contains(self, x, tol)

    def __rmatmul__(self, R) -> ConstrainedZonotope:
        return cz_linimg(R, self)

    def __add__(self, other) -> ConstrainedZonotope:
        if isinstance(other, ConstrainedZonotope):
            return cz_minksum(self, other)
        return ConstrainedZonotope(self.G, self.c + np.asarray(other, dtype=float), self.A, self.b)

    def __repr__(self):
        return f"ConstrainedZonotope(n={self.dim}, n_g={self.n_g}, n_c={self.n_c})"


def cz_cartesian(*sets: ConstrainedZonotope) -> ConstrainedZonotope:
    """Z x W x ...: block-diagonal generators and constraints, stacked centers"""
    assert sets, "cz_cartesian needs at least one set"
    return ConstrainedZonotope(
        block_diag(*[s.G for s in sets]),
        np.concatenate([s.c for s in sets]),
        block_diag(*[s.A for s in sets]),
        np.concatenate([s.b for s in sets]),
    )


def cz_linimg(R, Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """
    R Z = (R G, R c, A, b)

    Raises:
        ShapeError: R does not have Z.dim columns
    """
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[1] != Z.dim:
        if R.size == 0 and Z.dim == 0:
            R = np.zeros((R.shape[0], 0))
        else:
            raise ShapeError(f"matrix with {R.shape[1]} columns cannot map R^{Z.dim}")
    return ConstrainedZonotope(R @ Z.G, R @ Z.c, Z.A, Z.b)


def cz_minksum(Z: ConstrainedZonotope, W: ConstrainedZonotope) -> ConstrainedZonotope:
    """
    Z + W: generators side by side, centers added, constraints block-diagonal

    Raises:
        ShapeError: different dimensions
    """
    if Z.dim != W.dim:
        raise ShapeError(f"cannot add sets in R^{Z.dim} and R^{W.dim}")
    return ConstrainedZonotope(
        np.hstack([Z.G, W.G]),
        Z.c + W.c,
        block_diag(Z.A, W.A),
        np.concatenate([Z.b, W.b]),
    )


def cz_genintersect(Z: ConstrainedZonotope, R, Y: ConstrainedZonotope) -> ConstrainedZonotope:
    """
    {z in Z : R z in Y}

    Raises:
        ShapeError: R is not (Y.dim x Z.dim)
    """
    R = np.asarray(R, dtype=float)
    if R.size == 0:
        R = np.zeros((Y.dim, Z.dim))
    R = np.atleast_2d(R)
    if R.shape != (Y.dim, Z.dim):
        raise ShapeError(f"R must have shape {(Y.dim, Z.dim)}, got {R.shape}")
    G = np.hstack([Z.G, np.zeros((Z.dim, Y.n_g))])
    A = np.vstack(
        [
            np.hstack([Z.A, np.zeros((Z.n_c, Y.n_g))]),
            np.hstack([np.zeros((Y.n_c, Z.n_g)), Y.A]),
            np.hstack([R @ Z.G, -Y.G]),
        ]
    )
    b = np.concatenate([Z.b, Y.b, Y.c - R @ Z.c])
    return ConstrainedZonotope(G, Z.c, A, b)


def cz_intersect_hpoly(Z: ConstrainedZonotope, P: HPolytope) -> ConstrainedZonotope:
    """
    Exact Z intersected with {x : H x <= k, A_p x = b_p}.

    Every half-space becomes an equality with one slack generator: H z lies in
    [sigma, k] where sigma is the lower end of the interval hull of H applied to
    Z with its constraints dropped, so no LP is needed. When sigma > k the row
    is infeasible on all of Z and sigma is clipped to k, which keeps the
    result empty.

    Raises:
        ShapeError: P is not in R^{Z.dim}
    """
    if P.dim != Z.dim:
        raise ShapeError(f"polytope in R^{P.dim} cannot intersect a set in R^{Z.dim}")
    H, k = P.H, P.k
    n_h = H.shape[0]
    HG = H @ Z.G
    sigma = np.minimum(H @ Z.c - np.abs(HG).sum(axis=1), k)
    Gq = np.diag(0.5 * (k - sigma))
    cq = 0.5 * (k + sigma)

    G = np.hstack([Z.G, np.zeros((Z.dim, n_h))])
    A = np.vstack(
        [
            np.hstack([Z.A, np.zeros((Z.n_c, n_h))]),
            np.hstack([HG, -Gq]),
            np.hstack([P.A @ Z.G, np.zeros((P.n_cp, n_h))]),
        ]
    )
    b = np.concatenate([Z.b, cq - H @ Z.c, P.b - P.A @ Z.c])
    return ConstrainedZonotope(G, Z.c, A, b)


def cz_hull(Z: ConstrainedZonotope, solver: BoundedSimplex = None) -> IntervalVector:
    """
    Tightest box around Z, from 2n LPs (closed form for zonotopes).

    Raises:
        EmptySetError: Z is empty
    """
    if Z.n_c == 0:
        return Z.box()
    solver = solver or BoundedSimplex()
    lo = np.empty(Z.dim)
    hi = np.empty(Z.dim)
    for i in range(Z.dim):
        low = solver.solve(BoxEqualityLP(Z.G[i], Z.A, Z.b))
        if not low.is_optimal:
            raise EmptySetError("interval hull of an empty constrained zonotope")
        high = solver.solve(BoxEqualityLP(-Z.G[i], Z.A, Z.b))
        if not high.is_optimal:
            raise EmptySetError("interval hull of an empty constrained zonotope")
        lo[i] = Z.c[i] + low.value
        hi[i] = max(Z.c[i] - high.value, lo[i])
    return IntervalVector(lo, hi)


def cz_contains(Z: ConstrainedZonotope, x, tol: float = CONTAINMENT_TOL) -> bool:
    """
    True iff x = c + G xi for some feasible xi (to tolerance).

    Raises:
        ShapeError: x has the wrong length
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != Z.dim:
        raise ShapeError(f"point has {x.shape[0]} entries, set lives in R^{Z.dim}")
    if not Z.box().contains(x, tol):
        return False
    if Z.n_g == 0:
        return bool(np.all(np.abs(x - Z.c) <= tol) and np.all(np.abs(Z.b) <= tol))
    A = np.vstack([Z.G, Z.A])
    b = np.concatenate([x - Z.c, Z.b])
    if A.shape[0] == 0:
        return True
    return BoundedSimplex(feas_tol=tol).feasible(A, b)


def cz_is_empty(Z: ConstrainedZonotope) -> bool:
    if Z.n_c == 0:
        return False
    return not BoundedSimplex().feasible(Z.A, Z.b)
