import itertools
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize

from czsim import BoxEqualityLP, lp_solve, register_systems

PACKAGEDIR = Path(__file__).parent.absolute()
TEST_CONFIG_FILE = PACKAGEDIR.joinpath("testconfig.yaml")

"""
Fixtures
"""


@pytest.fixture
def config_filename():
    return str(TEST_CONFIG_FILE)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="module")
def registry():
    return register_systems()


def _vertex_minimum(cost, A, b):
    """
    Minimum of cost @ xi over {A xi = b, |xi| <= 1} by enumerating basic
    solutions: choose m basic variables, fix the rest at +-1. None if empty.
    """
    cost, A, b = np.asarray(cost, float), np.atleast_2d(np.asarray(A, float)), np.asarray(b, float)
    m, n = A.shape
    best = None
    for basis in itertools.combinations(range(n), m):
        B = A[:, basis]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        rest = [j for j in range(n) if j not in basis]
        for signs in itertools.product((-1.0, 1.0), repeat=len(rest)):
            xi = np.zeros(n)
            xi[rest] = signs
            xi[list(basis)] = np.linalg.solve(B, b - A[:, rest] @ np.array(signs))
            if np.all(np.abs(xi) <= 1.0 + 1e-9):
                value = float(cost @ xi)
                best = value if best is None else min(best, value)
    return best


@pytest.fixture
def vertex_minimum():
    return _vertex_minimum


def _cz_samples(Z, rng, count):
    """
    Points of Z: vertices from LPs with random costs and random convex
    combinations of them
    """
    vertices = []
    for _ in range(max(4, count // 10)):
        res = lp_solve(BoxEqualityLP(rng.normal(size=Z.n_g), Z.A, Z.b))
        vertices.append(Z.c + Z.G @ res.argmin)
    vertices = np.array(vertices)
    weights = rng.dirichlet(np.ones(len(vertices)), size=count)
    return np.vstack([vertices, weights @ vertices])


@pytest.fixture
def cz_samples():
    return _cz_samples


def _reference_minimum(cost, A, b):
    """Minimum of cost @ xi over {A xi = b, |xi| <= 1} from HiGHS. None if empty."""
    A = np.atleast_2d(np.asarray(A, float))
    res = optimize.linprog(cost, A_eq=A if A.size else None, b_eq=b if A.size else None, bounds=(-1.0, 1.0), method="highs")
    return float(res.fun) if res.status == 0 else None


@pytest.fixture
def reference_minimum():
    return _reference_minimum


def _reference_hull(Z):
    """Interval hull of a constrained zonotope from HiGHS"""
    lo = [Z.c[i] + _reference_minimum(Z.G[i], Z.A, Z.b) for i in range(Z.dim)]
    hi = [Z.c[i] - _reference_minimum(-Z.G[i], Z.A, Z.b) for i in range(Z.dim)]
    return np.array(lo), np.array(hi)


@pytest.fixture
def reference_hull():
    return _reference_hull
