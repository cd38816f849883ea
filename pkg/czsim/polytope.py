"""
Convex polytopes in half-space representation with a separate equality block:

    P = {x : H x <= k, A x = b}

Equalities are never split into inequality pairs; factor elimination works on
the equality block directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ShapeError
from .utils import CONTAINMENT_TOL


def _block(M, v, dim: int, name: str):
    M = np.zeros((0, dim)) if M is None or np.size(M) == 0 else np.atleast_2d(np.asarray(M, dtype=float))
    v = np.zeros(0) if v is None or np.size(v) == 0 else np.asarray(v, dtype=float).reshape(-1)
    if M.shape[1] != dim:
        raise ShapeError(f"{name} has {M.shape[1]} columns, expected {dim}")
    if M.shape[0] != v.shape[0]:
        raise ShapeError(f"{name} has {M.shape[0]} rows but its right hand side has {v.shape[0]}")
    return M, v


@dataclass(frozen=True)
class HPolytope:
    """
    Attributes:
        H, k: inequality block, shape (n_h, n) and (n_h,)
        A, b: equality block, shape (n_cp, n) and (n_cp,)

    Use `HPolytope.from_rows` to build one when some blocks are empty.
    """

    H: np.ndarray
    k: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        dim = np.shape(self.H)[1] if np.ndim(self.H) == 2 else np.shape(self.A)[1]
        H, k = _block(self.H, self.k, dim, "H")
        A, b = _block(self.A, self.b, dim, "A")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_rows(cls, dim: int, H=None, k=None, A=None, b=None) -> HPolytope:
        H, k = _block(H, k, dim, "H")
        A, b = _block(A, b, dim, "A")
        return cls(H, k, A, b)

    @classmethod
    def whole_space(cls, dim: int) -> HPolytope:
        return cls.from_rows(dim)

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @property
    def n_h(self) -> int:
        return self.H.shape[0]

    @property
    def n_cp(self) -> int:
        return self.A.shape[0]

    def __contains__(self, x) -> bool:
        return poly_contains(self, x)


def poly_intersect(P: HPolytope, Q: HPolytope) -> HPolytope:
    """
    Rows of P stacked over rows of Q, in both blocks.

    Raises:
        ShapeError: different ambient dimensions
    """
    return poly_intersect_all([P, Q])


def poly_intersect_all(polytopes: Iterable[HPolytope], dim: int = None) -> HPolytope:
    """Stack any number of polytopes in one pass"""
    polys = list(polytopes)
    if not polys:
        assert dim is not None, "dimension needed to intersect an empty collection"
        return HPolytope.whole_space(dim)
    dim = polys[0].dim if dim is None else dim
    for p in polys:
        if p.dim != dim:
            raise ShapeError(f"cannot intersect polytopes in R^{dim} and R^{p.dim}")
    return HPolytope(
        np.vstack([p.H for p in polys]),
        np.concatenate([p.k for p in polys]),
        np.vstack([p.A for p in polys]),
        np.concatenate([p.b for p in polys]),
    )


def poly_contains(P: HPolytope, x, tol: float = CONTAINMENT_TOL) -> bool:
    """
    True iff H x <= k + tol and |A x - b| <= tol componentwise.

    Raises:
        ShapeError: x has the wrong length
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != P.dim:
        raise ShapeError(f"point has {x.shape[0]} entries, polytope lives in R^{P.dim}")
    return bool(np.all(P.H @ x <= P.k + tol) and np.all(np.abs(P.A @ x - P.b) <= tol))
