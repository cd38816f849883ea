"""
Tolerances and small numeric helpers shared across modules
"""

from typing import Callable, Sequence

import numpy as np
from scipy import linalg, optimize

# LP tolerances
FEASIBILITY_TOL = 1e-9
PIVOT_TOL = 1e-11

# membership tests on sets
CONTAINMENT_TOL = 1e-9

# root finding used by the relaxations
BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200

# secants narrower than this use the endpoint bound
MIN_SECANT_WIDTH = 1e-12

# constraint propagation sweeps during reduction
PROPAGATION_SWEEPS = 10


def bisect(fn: Callable[[float], float], lo: float, hi: float) -> float:
    """
    Root of `fn` on [lo, hi] to BISECT_TOL. `fn(lo)` and `fn(hi)` must not
    have the same sign.
    """
    return optimize.bisect(fn, lo, hi, xtol=BISECT_TOL, maxiter=BISECT_MAX_ITER)


def block_diag(*blocks: np.ndarray) -> np.ndarray:
    """
    Block-diagonal assembly. Blocks with 0 rows or 0 columns still contribute
    their other dimension.
    """
    return linalg.block_diag(*blocks)


def forward_substitution(lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Solve `lower @ x = rhs` for a lower triangular matrix. `rhs` may be a
    vector or a matrix (solved column-wise).
    """
    n = lower.shape[0]
    assert lower.shape == (n, n), "forward_substitution: matrix must be square"
    if n == 0:
        return np.array(rhs, dtype=float, copy=True)
    return linalg.solve_triangular(lower, rhs, lower=True)


def as_vector(values: Sequence[float], name: str = "vector") -> np.ndarray:
    """Return a 1-D float array"""
    v = np.asarray(values, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    assert v.ndim == 1, f"{name} must be 1-D, got shape {v.shape}"
    return v


def as_matrix(values, cols: int, name: str = "matrix") -> np.ndarray:
    """
    Return a 2-D float array with `cols` columns. An empty 2-D input with
    `cols` columns keeps its row count; any other empty input gives a
    (0, cols) array.
    """
    if values is None:
        return np.zeros((0, cols))
    m = np.asarray(values, dtype=float)
    if m.size == 0:
        rows = m.shape[0] if m.ndim == 2 and m.shape[1] == cols else 0
        return np.zeros((rows, cols))
    if m.ndim == 1:
        m = m.reshape(1, -1)
    assert m.ndim == 2, f"{name} must be 2-D, got shape {m.shape}"
    return m


def selector(rows: Sequence[int], width: int) -> np.ndarray:
    """0/1 matrix with a single 1 per row at the given column"""
    E = np.zeros((len(rows), width))
    for i, j in enumerate(rows):
        E[i, j] = 1.0
    return E
