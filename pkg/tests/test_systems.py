import math

import numpy as np
import pytest

from czsim import NoiseMode, cz_contains, register_systems, simulate_truth


def test_registry(registry):
    assert ["example1", "example2", "example3"] == sorted(registry)
    assert registry["example1"] is registry.example1
    with pytest.raises(AttributeError):
        registry.example4
    with pytest.raises(KeyError):
        register_systems(["example4"])


def test_dimensions(registry):
    for name, n_x, n_w, n_v, n_y in [
        ("example1", 2, 2, 2, 2),
        ("example2", 4, 3, 3, 3),
        ("example3", 4, 0, 2, 2),
    ]:
        model = registry[name].model
        assert (n_x, n_w, n_v, n_y) == (model.n_x, model.n_w, model.n_v, model.n_y)
        assert n_x == registry[name].X0.dim


def test_initial_state_in_initial_set(registry):
    for system in registry.values():
        assert cz_contains(system.X0, system.x0)


def test_example3_input_and_sampling_time():
    system = register_systems(["example3"])["example3"]
    assert 20.0 * math.sin(0.01 * 7) == pytest.approx(system.u(7)[0])
    faster = register_systems(["example3"], ts=0.02)["example3"]
    assert 20.0 * math.sin(0.02 * 7) == pytest.approx(faster.u(7)[0])


def test_simulation_is_reproducible(registry):
    system = registry.example1
    first = simulate_truth(system, seed=11, steps=20)
    second = simulate_truth(system, seed=11, steps=20)
    other = simulate_truth(system, seed=12, steps=20)
    assert np.array_equal(first.x, second.x)
    assert np.array_equal(first.y, second.y)
    assert not np.array_equal(first.x, other.x)


def test_simulation_shapes(registry):
    system = registry.example3
    truth = simulate_truth(system, seed=0, steps=10)
    assert (11, 4) == truth.x.shape
    assert (11, 2) == truth.y.shape
    assert (10, 1) == truth.u.shape
    assert (10, 0) == truth.w.shape
    assert [system.u(k)[0] for k in range(10)] == truth.u[:, 0].tolist()


def test_noise_stays_in_bounds(registry):
    system = registry.example2
    truth = simulate_truth(system, seed=5, steps=30)
    assert np.all(truth.w >= system.W.lo) and np.all(truth.w <= system.W.hi)
    assert np.all(truth.v >= system.V.lo) and np.all(truth.v <= system.V.hi)


def test_noise_modes(registry):
    system = registry.example1
    zero = simulate_truth(system, seed=0, steps=5, noise_mode=NoiseMode.ZERO)
    assert np.array_equal(np.tile(system.W.mid, (5, 1)), zero.w)
    extreme = simulate_truth(system, seed=0, steps=5, noise_mode="extreme")
    assert np.all((extreme.w == system.W.lo) | (extreme.w == system.W.hi))


def test_measurements_match_the_tape(registry):
    system = registry.example1
    truth = simulate_truth(system, seed=3, steps=3)
    for x, v, y in zip(truth.x, truth.v, truth.y):
        expected = [x[0] - math.sin(x[1] / 2.0) + v[0], -x[0] * x[1] + x[1] + v[1]]
        assert expected == y.tolist()
