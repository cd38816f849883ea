import numpy as np
import pytest

from czsim import BoxEqualityLP, InputError, ShapeError, dual_bound, lp_feasible, lp_solve


def test_single_equality():
    res = lp_solve(BoxEqualityLP([1.0, 0.0], [[1.0, 1.0]], [1.0]))
    assert res.is_optimal
    assert 0.0 == pytest.approx(res.value, abs=1e-9)
    assert np.allclose([0.0, 1.0], res.argmin, atol=1e-9)


def test_infeasible():
    res = lp_solve(BoxEqualityLP([1.0, 0.0], [[1.0, 1.0]], [5.0]))
    assert "infeasible" == res.status
    assert not res.is_optimal


def test_without_constraints():
    res = lp_solve(BoxEqualityLP([1.0, -2.0, 0.0], np.zeros((0, 3)), np.zeros(0)))
    assert -3.0 == res.value
    assert [-1.0, 1.0, 0.0] == res.argmin.tolist()


def test_feasibility():
    assert lp_feasible([[1.0, 1.0]], [2.0])
    assert not lp_feasible([[1.0, -1.0]], [3.0])


def test_dual_bound_matches_optimum():
    problem = BoxEqualityLP([1.0, 2.0, -1.0], [[1.0, 1.0, 1.0], [1.0, -1.0, 0.5]], [0.5, 0.2])
    res = lp_solve(problem)
    assert res.is_optimal
    assert res.value == pytest.approx(dual_bound(problem, res.duals), abs=1e-8)


def test_against_vertex_enumeration(rng, vertex_minimum):
    for _ in range(25):
        n, m = 5, 2
        A = rng.normal(size=(m, n))
        b = A @ rng.uniform(-0.8, 0.8, size=n)
        cost = rng.normal(size=n)
        res = lp_solve(BoxEqualityLP(cost, A, b))
        assert res.is_optimal
        assert vertex_minimum(cost, A, b) == pytest.approx(res.value, abs=1e-7)
        assert np.allclose(A @ res.argmin, b, atol=1e-7)
        assert np.all(np.abs(res.argmin) <= 1.0)


def test_degenerate_rows():
    # duplicated constraint rows
    A = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([0.5, 0.5, 0.0])
    res = lp_solve(BoxEqualityLP([0.0, 0.0, 1.0], A, b))
    assert res.is_optimal
    assert -1.0 == pytest.approx(res.value, abs=1e-9)


def test_bad_input():
    with pytest.raises(InputError):
        BoxEqualityLP([np.nan, 1.0], [[1.0, 1.0]], [0.0])
    with pytest.raises(ShapeError):
        BoxEqualityLP([1.0, 1.0], [[1.0, 1.0, 1.0]], [0.0])
    with pytest.raises(ShapeError):
        BoxEqualityLP([1.0, 1.0], [[1.0, 1.0]], [0.0, 1.0])


def large_instance(rng, n=140, m=100, redundant=5):
    """Badly scaled rows and columns, some redundant rows, a degenerate feasible point"""
    A = rng.normal(size=(m, n)) * 10.0 ** rng.uniform(-1.0, 1.0, size=n)
    A = A * 10.0 ** rng.uniform(-2.0, 2.0, size=(m, 1))
    A = np.vstack([A, rng.normal(size=(redundant, m)) @ A])
    xi = rng.uniform(-0.9, 0.9, size=n)
    xi[rng.permutation(n)[: n // 5]] = rng.choice([-1.0, 1.0], size=n // 5)
    return A, A @ xi


def test_matches_reference_on_large_instance(rng, reference_minimum):
    A, b = large_instance(rng)
    for _ in range(3):
        problem = BoxEqualityLP(rng.normal(size=A.shape[1]), A, b)
        res = lp_solve(problem)
        expected = reference_minimum(problem.cost, A, b)
        assert res.is_optimal
        assert expected == pytest.approx(res.value, abs=1e-6 * (1.0 + abs(expected)))
        assert np.all(np.abs(res.argmin) <= 1.0)
        assert np.abs(A @ res.argmin - b).max() <= 1e-6 * (1.0 + np.abs(b).max())
        assert res.value == pytest.approx(dual_bound(problem, res.duals), abs=1e-6 * (1.0 + abs(res.value)))


def test_large_instance_infeasible(rng):
    A, b = large_instance(rng, n=120, m=100, redundant=0)
    # the first row can reach at most the l1 norm of its coefficients
    b = b.copy()
    b[0] = 1.5 * np.abs(A[0]).sum()
    assert "infeasible" == lp_solve(BoxEqualityLP(np.zeros(A.shape[1]), A, b)).status
    assert not lp_feasible(A, b)


def test_rows_without_coefficients():
    A = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert lp_solve(BoxEqualityLP([1.0, 0.0], A, [0.0, 1.0])).is_optimal
    assert "infeasible" == lp_solve(BoxEqualityLP([1.0, 0.0], A, [0.3, 1.0])).status
    assert lp_feasible(np.zeros((2, 0)), [0.0, 0.0])
    assert not lp_feasible(np.zeros((2, 0)), [0.0, 1.0])
