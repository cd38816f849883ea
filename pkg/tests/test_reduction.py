import warnings

import numpy as np
import pytest

from czsim import ConstrainedZonotope, cz_contains, cz_hull, cz_reduce
from czsim.reduction import (
    ReductionLimits,
    drop_trivial,
    eliminate_constraint,
    propagate_bounds,
    reduce_generators,
    rescale,
)


def random_cz(rng, n=2, n_g=10, n_c=3):
    A = rng.normal(size=(n_c, n_g))
    return ConstrainedZonotope(
        rng.normal(size=(n, n_g)),
        rng.normal(size=n),
        A,
        A @ rng.uniform(-0.5, 0.5, size=n_g),
    )


def test_eliminating_the_only_constraint():
    Z = ConstrainedZonotope(np.eye(2), np.zeros(2), [[1.0, 1.0]], [1.0])
    R = eliminate_constraint(Z)
    assert 0 == R.n_c
    assert 1 == R.n_g
    for t in np.linspace(0.0, 1.0, 11):
        assert cz_contains(R, [t, 1.0 - t])
    hull = cz_hull(R)
    assert np.allclose([0.0, 0.0], hull.lo, atol=1e-8)
    assert np.allclose([1.0, 1.0], hull.hi, atol=1e-8)


def test_propagate_bounds():
    lo, hi, empty = propagate_bounds(np.array([[1.0, 1.0]]), np.array([1.5]))
    assert not empty
    assert np.allclose([0.5, 0.5], lo)
    assert np.allclose([1.0, 1.0], hi)

    _, _, empty = propagate_bounds(np.array([[1.0, 1.0]]), np.array([5.0]))
    assert empty


def test_rescale_keeps_the_set(rng, cz_samples):
    Z = random_cz(rng)
    lo, hi, empty = propagate_bounds(Z.A, Z.b)
    assert not empty
    R = rescale(Z, lo, hi)
    for x in cz_samples(Z, rng, 30):
        assert cz_contains(R, x, 1e-7)


def test_drop_trivial():
    G = np.array([[1.0, 0.0, 2.0], [0.0, 0.0, 1.0]])
    A = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    Z = drop_trivial(ConstrainedZonotope(G, np.zeros(2), A, [0.5, 0.0]))
    assert 2 == Z.n_g
    assert 1 == Z.n_c


def test_within_limits_returns_same_object(rng):
    Z = random_cz(rng)
    assert cz_reduce(Z, 10, 3) is Z
    assert cz_reduce(Z, None, None) is Z


def test_reduce_encloses(rng, cz_samples):
    for _ in range(4):
        Z = random_cz(rng)
        R = cz_reduce(Z, 6, 1)
        assert R.n_g <= 6
        assert R.n_c <= 1
        for x in cz_samples(Z, rng, 30):
            assert cz_contains(R, x, 1e-7)


def test_constraint_limit_only(rng, cz_samples):
    Z = random_cz(rng)
    R = cz_reduce(Z, None, 0)
    assert 0 == R.n_c
    for x in cz_samples(Z, rng, 30):
        assert cz_contains(R, x, 1e-7)


def test_generator_limit_equal_to_dimension_gives_hull(rng):
    Z = random_cz(rng)
    R = cz_reduce(Z, 2, 0)
    assert 2 == R.n_g
    assert 0 == R.n_c
    expected = cz_hull(Z)
    actual = cz_hull(R)
    assert np.allclose(expected.lo, actual.lo, atol=1e-8)
    assert np.allclose(expected.hi, actual.hi, atol=1e-8)


def test_zonotope_generator_reduction_keeps_hull(rng):
    Z = ConstrainedZonotope(rng.normal(size=(3, 12)), rng.normal(size=3))
    R = reduce_generators(Z, 6)
    assert R.n_g <= 6
    assert np.allclose(Z.box().lo, R.box().lo)
    assert np.allclose(Z.box().hi, R.box().hi)


def test_reduction_is_deterministic(rng):
    Z = random_cz(rng)
    first = cz_reduce(Z, 5, 1)
    second = cz_reduce(Z, 5, 1)
    assert np.array_equal(first.G, second.G)
    assert np.array_equal(first.A, second.A)


def test_limits():
    Z = ConstrainedZonotope(np.eye(2), np.zeros(2), [[1.0, 1.0]], [1.0])
    assert ReductionLimits().satisfied_by(Z)
    assert ReductionLimits(2, 1).satisfied_by(Z)
    assert not ReductionLimits(2, 0).satisfied_by(Z)
    with pytest.raises(AssertionError):
        cz_reduce(Z, 1, 0)


def test_constraints_go_before_generators_are_merged(rng, cz_samples):
    Z = random_cz(rng, n_g=30, n_c=15)
    R = cz_reduce(Z, 20, 8)
    # n_g - n_c = 15 fits the generator limit: elimination alone gets there
    assert (20, 5) == (R.n_g, R.n_c)
    for x in cz_samples(Z, rng, 30):
        assert cz_contains(R, x, 1e-7)


def test_merge_leaves_room_for_generators(rng, cz_samples):
    Z = random_cz(rng, n_g=40, n_c=10)
    R = cz_reduce(Z, 20, 8)
    assert R.n_g <= 20
    assert R.dim + R.n_c <= 10
    for x in cz_samples(Z, rng, 30):
        assert cz_contains(R, x, 1e-7)


def test_elimination_cost_is_finite_for_unweighted_columns():
    # the middle column has no generator and a coefficient below the pivot threshold
    G = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    A = np.array([[1e-4, 5e-12, 1e-4]])
    Z = ConstrainedZonotope(G, np.zeros(2), A, [0.5e-4])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        R = eliminate_constraint(Z)
    assert 0 == R.n_c
    assert cz_contains(R, [0.25, 0.25], 1e-7)
