import numpy as np
import pytest

from czsim import HPolytope, ShapeError, poly_contains, poly_intersect


def test_intersection_stacks_rows():
    P = HPolytope.from_rows(1, H=[[1.0]], k=[1.0])
    Q = HPolytope.from_rows(1, H=[[-1.0]], k=[0.0])
    R = poly_intersect(P, Q)
    assert 2 == R.n_h
    assert 0 == R.n_cp
    assert poly_contains(R, [0.5])
    assert not poly_contains(R, [1.5])
    assert not poly_contains(R, [-0.1])


def test_tolerance():
    P = HPolytope.from_rows(1, H=[[1.0]], k=[1.0])
    assert poly_contains(P, [1.0 + 1e-10])
    assert not poly_contains(P, [1.0 + 1e-6])
    assert poly_contains(P, [1.0 + 1e-6], tol=1e-5)


def test_equality_block():
    P = HPolytope.from_rows(2, A=[[1.0, 1.0]], b=[1.0])
    assert 1 == P.n_cp
    assert 0 == P.n_h
    assert [0.3, 0.7] in P
    assert [0.3, 0.8] not in P


def test_whole_space():
    P = HPolytope.whole_space(3)
    assert 3 == P.dim
    assert poly_contains(P, np.full(3, 1e9))


def test_dimension_mismatch():
    with pytest.raises(ShapeError):
        poly_intersect(HPolytope.whole_space(2), HPolytope.whole_space(3))
    with pytest.raises(ShapeError):
        poly_contains(HPolytope.whole_space(2), [1.0])
    with pytest.raises(ShapeError):
        HPolytope.from_rows(2, H=[[1.0, 0.0]], k=[1.0, 2.0])
