import numpy as np
import pytest

from czsim import (
    DomainError,
    Interval,
    IntervalVector,
    ShapeError,
    UnsupportedOpError,
    eval_batch,
    eval_interval,
    eval_real,
    linear_map,
    record,
    record_composite,
    sin,
)


def test_identity_tape():
    graph = record(lambda s: s, 3)
    assert 3 == graph.n_z
    assert (0, 1, 2) == graph.output_rows


def test_sum_and_product_tape():
    graph = record(lambda s: [s[0] + s[1], s[0] * s[1]], 2)
    assert 4 == graph.n_z
    assert (2, 3) == graph.output_rows
    assert ["add", "mul"] == [n.kind for n in graph.nodes[2:]]
    _, out = eval_real(graph, [2.0, 5.0])
    assert [7.0, 10.0] == out.tolist()


def test_example1_dynamics_value(registry):
    graph = registry.example1.model.f_graph
    _, out = eval_real(graph, [5.2, 0.65, 0.0, 0.0])
    assert 10.2675 == pytest.approx(out[0], abs=1e-4)
    assert -0.1978 == pytest.approx(out[1], abs=1e-4)


def test_eval_real_matches_plain_python():
    def fn(s):
        return [s[0] * s[1] / (4.0 + s[0]) - sin(s[1] / 2.0), s[0] ** 3 - 2.0 * s[1]]

    graph = record(fn, 2)
    _, out = eval_real(graph, [1.3, -0.4])
    assert fn([1.3, -0.4]) == out.tolist()


def test_eval_batch_matches_eval_real(registry, rng):
    graph = registry.example1.model.f_graph
    samples = rng.uniform(-1.0, 6.0, size=(20, graph.n_s))
    Z = eval_batch(graph, samples)
    for row, s in zip(Z, samples):
        z, _ = eval_real(graph, s)
        assert np.allclose(z, row, rtol=1e-14, atol=1e-12)


def test_interval_extension_of_product():
    graph = record(lambda s: s[0] * s[1], 2)
    Z = eval_interval(graph, IntervalVector([-1.0, 3.0], [2.0, 4.0]))
    assert Interval(-4.0, 8.0) == Z[2]


def test_interval_extension_encloses_samples(registry, rng):
    graph = registry.example1.model.f_graph
    S = IntervalVector([4.0, 0.0, -0.8, -0.8], [6.0, 1.0, 0.8, 0.8])
    Z = eval_interval(graph, S)
    samples = rng.uniform(S.lo, S.hi, size=(300, 4))
    values = eval_batch(graph, samples)
    assert np.all(values >= Z.lo - 1e-12)
    assert np.all(values <= Z.hi + 1e-12)


def test_constant_output():
    graph = record(lambda s: [s[0], 3.0], 1)
    _, out = eval_real(graph, [1.5])
    assert [1.5, 3.0] == out.tolist()


def test_params_are_resolved_at_evaluation():
    graph = record(lambda s, p: s[0] + 2.0 * p[0], 1, 1)
    assert 1 == graph.n_params
    _, out = eval_real(graph, [1.0], [2.0])
    assert [5.0] == out.tolist()
    _, out = eval_real(graph, [1.0], [-1.0])
    assert [-1.0] == out.tolist()


def test_missing_params_raise():
    graph = record(lambda s, p: s[0] * p[0], 1, 1)
    with pytest.raises(ShapeError):
        eval_real(graph, [1.0])


def test_unsupported_operations():
    with pytest.raises(UnsupportedOpError):
        record(lambda s: abs(s[0]), 1)
    with pytest.raises(UnsupportedOpError):
        record(lambda s: s[0] if s[0] else s[1], 2)
    with pytest.raises(UnsupportedOpError):
        record(lambda s: s[0] ** 0.5, 1)


def test_division_by_zero():
    graph = record(lambda s: s[0] / s[1], 2)
    with pytest.raises(DomainError):
        eval_real(graph, [1.0, 0.0])


def test_composite_tape():
    f = record(lambda s: [s[0] * s[1]], 2)
    g = record(lambda s: [s[0] + s[1]], 2)
    ell = record_composite(f, g, 1)
    assert 3 == ell.n_s
    assert f.n_z + 1 + 1 == ell.n_z
    z, out = eval_real(ell, [2.0, 3.0, 1.0])
    assert [7.0] == out.tolist()
    assert [6.0] == z[list(ell.state_rows)].tolist()


def test_composite_rejects_mismatched_inputs():
    f = record(lambda s: [s[0] * s[1]], 2)
    g = record(lambda s: [s[0] + s[1] + s[2]], 3)
    with pytest.raises(ShapeError):
        record_composite(f, g, 1)


def test_linear_map():
    M, d = linear_map(record(lambda s: [2.0 * s[0] - s[1] + 1.0], 2))
    assert [[2.0, -1.0]] == M.tolist()
    assert [1.0] == d.tolist()
    assert linear_map(record(lambda s: [s[0] * s[1]], 2)) is None
