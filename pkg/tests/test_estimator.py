import numpy as np
import pytest

from czsim import (
    EmptySetError,
    Estimator,
    ShapeError,
    SystemModel,
    build_elimination,
    build_lifted,
    cz_contains,
    cz_hull,
    cz_reduce,
    eval_real,
    predict,
    predict_update_full,
    predict_update_reduced,
    record,
    simulate_truth,
    update_initial,
)
from czsim.estimator import HULL_MARGIN, PATH_LIFTED, PATH_LINEAR_OUTPUT, update_linear_output
from czsim.interval import IntervalVector
from czsim.reduction import ReductionLimits

TOL = 1e-7


def step_truth(system):
    """x1 = f(x0, mid W) and y1 = g(x1, mid V)"""
    model = system.model
    _, x1 = eval_real(model.f_graph, np.concatenate([system.x0, system.W.mid]))
    _, y1 = eval_real(model.g_graph, np.concatenate([x1, system.V.mid]))
    return x1, y1


def test_model_rejects_wrong_state_size():
    with pytest.raises(ShapeError):
        SystemModel.from_functions(lambda x, w, u: [x[0] + w[0]], lambda x, v: [x[0] + v[0]], 2, 1, 1)


def test_linear_output_detection(registry):
    assert registry.example1.model.output_linear is None
    C, D_v, d = registry.example2.model.output_linear
    assert (3, 4) == C.shape
    assert np.array_equal(np.eye(3), D_v)
    assert [0.0, 0.0, 0.0] == d.tolist()


def test_predict_encloses_images(registry, rng, cz_samples):
    system = registry.example1
    for eliminate in (True, False):
        Xbar = predict(system.model, system.X0, system.W_set, eliminate=eliminate)
        for x in cz_samples(system.X0, rng, 40):
            w = rng.uniform(system.W.lo, system.W.hi)
            _, x_next = eval_real(system.model.f_graph, np.concatenate([x, w]))
            assert cz_contains(Xbar, x_next, TOL)


def test_update_initial_contains_state(registry):
    system = registry.example1
    truth = simulate_truth(system, seed=1, steps=1)
    X = update_initial(system.model, system.X0, system.V_set, truth.y[0])
    assert cz_contains(X, truth.x[0], TOL)
    assert cz_hull(X).is_subset(cz_hull(system.X0), 1e-6)


def test_full_and_reduced_sizes(registry):
    system = registry.example1
    model = system.model
    W, V = system.W_set, system.V_set
    x1, y1 = step_truth(system)

    # cos and sin factors are relaxed over their own argument, so every factor of the
    # tape counts once; there are no extra shifted-argument factors
    S = cz_hull(system.X0).concat(cz_hull(W), cz_hull(V)).inflate(HULL_MARGIN)
    lifted = build_lifted(model.ell_graph, S)
    n_h = lifted.polytope.n_h
    n_cp = lifted.polytope.n_cp + model.n_y
    n_e = len(lifted.defining_rows)
    assert n_e == len(model.ell_graph.eliminable())

    full = predict_update_full(model, system.X0, W, V, (), y1)
    reduced = predict_update_reduced(model, system.X0, W, V, (), y1)
    assert system.X0.n_g + W.n_g + V.n_g + (model.ell_graph.n_z - model.ell_graph.n_s) + n_h == full.n_g
    assert n_h + n_cp == full.n_c
    assert full.n_g - n_e == reduced.n_g
    assert full.n_c - n_e == reduced.n_c

    assert cz_contains(full, x1, TOL)
    assert cz_contains(reduced, x1, TOL)
    full_hull, reduced_hull = cz_hull(full), cz_hull(reduced)
    assert np.allclose(full_hull.lo, reduced_hull.lo, atol=1e-6)
    assert np.allclose(full_hull.hi, reduced_hull.hi, atol=1e-6)


def test_linear_output_update(registry):
    system = registry.example2
    model = system.model
    C, D_v, d = model.output_linear
    v = np.array([0.005, -0.003, 0.0005])
    y = C @ system.x0 + D_v @ v + d
    X = update_linear_output(model, system.X0, system.V_set, y)
    assert cz_contains(X, system.x0, TOL)
    assert not cz_contains(X, system.x0 + [0.009, 0.0, 0.0, 0.0], TOL)


def test_elimination_back_substitution():
    graph = record(lambda s: [2.0 * s[0] + s[1], s[0] * s[1] - 1.0], 2)
    lifted = build_lifted(graph, IntervalVector([0.0, 0.0], [1.0, 1.0]))
    plan = build_elimination(lifted.polytope, graph.selector(), sorted(lifted.defining_rows), lifted.defining_rows)
    assert (2, 3, 5) == plan.eliminate
    assert (0, 1, 4) == plan.retain
    assert np.allclose(np.tril(plan.A_ee), plan.A_ee)

    z, out = eval_real(graph, [0.3, 0.8])
    z_r = z[list(plan.retain)]
    assert np.allclose(z, plan.back_substitute(z_r))
    assert np.allclose(out, plan.G_f @ z_r + plan.c_f)
    assert plan.polytope.dim == len(plan.retain)


def test_estimator_contains_truth(registry):
    system = registry.example1
    truth = simulate_truth(system, seed=2, steps=5)
    estimator = Estimator(system.model, system.W_set, system.V_set, ReductionLimits(20, 8))
    state = estimator.initialize(truth.y[0], system.X0)
    assert cz_contains(state.Xhat, truth.x[0], TOL)
    for k in range(1, 6):
        state = estimator.step(truth.u[k - 1], truth.y[k])
        assert k == state.k
        assert PATH_LIFTED == state.diagnostics.path
        assert state.diagnostics.n_g <= 20
        assert state.diagnostics.n_c <= 8
        assert cz_contains(state.Xhat, truth.x[k], TOL)
        assert state.diagnostics.hull.contains(truth.x[k], TOL)
    assert 6 == len(estimator.history)


def test_estimator_linear_output_path(registry):
    system = registry.example2
    truth = simulate_truth(system, seed=4, steps=3)
    estimator = Estimator(system.model, system.W_set, system.V_set, system.limits)
    estimator.initialize(truth.y[0], system.X0)
    for k in range(1, 4):
        state = estimator.step(truth.u[k - 1], truth.y[k])
        assert PATH_LINEAR_OUTPUT == state.diagnostics.path
        assert cz_contains(state.Xhat, truth.x[k], TOL)


def test_inconsistent_measurement(registry):
    system = registry.example1
    estimator = Estimator(system.model, system.W_set, system.V_set)
    with pytest.raises(EmptySetError):
        estimator.initialize([1000.0, 1000.0], system.X0)


@pytest.mark.slow
def test_full_and_reduced_agree_along_a_run(registry):
    system = registry.example1
    model = system.model
    truth = simulate_truth(system, seed=6, steps=20)
    estimator = Estimator(model, system.W_set, system.V_set, system.limits)
    state = estimator.initialize(truth.y[0], system.X0)
    for k in range(1, 21):
        hulls = (state.diagnostics.hull, system.W, system.V)
        full = cz_hull(predict_update_full(model, state.Xhat, system.W_set, system.V_set, (), truth.y[k], hulls=hulls))
        reduced = cz_hull(predict_update_reduced(model, state.Xhat, system.W_set, system.V_set, (), truth.y[k], hulls=hulls))
        tol = 1e-6 * (1.0 + full.width)
        assert np.all(np.abs(full.lo - reduced.lo) <= tol)
        assert np.all(np.abs(full.hi - reduced.hi) <= tol)
        state = estimator.step(truth.u[k - 1], truth.y[k])


def test_reduction_keeps_the_measurement_information(registry):
    system = registry.example1
    model = system.model
    truth = simulate_truth(system, seed=2, steps=3)
    estimator = Estimator(model, system.W_set, system.V_set, ReductionLimits(20, 8))
    state = estimator.initialize(truth.y[0], system.X0)
    for k in range(1, 4):
        hulls = (state.diagnostics.hull, system.W, system.V)
        X = predict_update_reduced(model, state.Xhat, system.W_set, system.V_set, (), truth.y[k], hulls=hulls)
        R = cz_reduce(X, 20, 8)
        before, after = cz_hull(X), cz_hull(R)
        assert before.is_subset(after, 1e-7)
        assert np.all(after.width <= 5.0 * before.width + 1e-9)
        assert cz_contains(R, truth.x[k], TOL)
        state = estimator.step(truth.u[k - 1], truth.y[k])


def test_unreduced_hulls_match_reference(registry, reference_hull):
    system = registry.example1
    truth = simulate_truth(system, seed=2, steps=4)
    estimator = Estimator(system.model, system.W_set, system.V_set)
    state = estimator.initialize(truth.y[0], system.X0)
    for k in range(1, 5):
        state = estimator.step(truth.u[k - 1], truth.y[k])
        lo, hi = reference_hull(state.Xhat)
        hull = state.diagnostics.hull
        assert np.allclose(lo, hull.lo, atol=1e-5 * (1.0 + np.abs(lo).max()))
        assert np.allclose(hi, hull.hi, atol=1e-5 * (1.0 + np.abs(hi).max()))
        assert hull.contains(truth.x[k], TOL)
        assert cz_contains(state.Xhat, truth.x[k], TOL)
