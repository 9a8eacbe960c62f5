import numpy as np
import pytest

from lmcot import interpolation
from lmcot.enums import LossKind, MatchKind
from lmcot.errors import ArgumentError
from lmcot.matching import MatchMethod, apply_stack, match_layers, random_stack
from lmcot.network import Dataset, MlpWeights
from lmcot.numerics import make_rng


@pytest.fixture
def data():
    rng = make_rng(2)
    return Dataset(inputs=rng.standard_normal((4, 64)), targets=rng.integers(0, 3, size=64))


def test_interpolate__endpoints(make_net):
    A = make_net((4, 6, 3), seed=1, use_bias=True)
    B = make_net((4, 6, 3), seed=2, use_bias=True)
    at_one = interpolation.interpolate(A, B, 1.0)
    at_zero = interpolation.interpolate(A, B, 0.0)
    assert all(np.array_equal(p, q) for p, q in zip(at_one.parameters(), A.parameters()))
    assert all(np.array_equal(p, q) for p, q in zip(at_zero.parameters(), B.parameters()))
    with pytest.raises(ArgumentError):
        interpolation.interpolate(A, B, 1.5)


def test_uniform_grid():
    grid = interpolation.uniform_grid(5)
    assert grid.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ArgumentError):
        interpolation.uniform_grid(2)


def test_barrier_curve__same_network_is_flat(make_net, data):
    A = make_net((4, 6, 3), seed=1)
    curve = interpolation.barrier_curve(A, A, data, LossKind.CROSS_ENTROPY)
    assert len(curve.t_grid) == 25
    assert curve.barrier == pytest.approx(0.0, abs=1e-9)
    assert curve.loss_a == curve.loss_b


def test_barrier_curve__nonnegative(make_net, data):
    for seed in range(5):
        A = make_net((4, 6, 3), seed=2 * seed)
        B = make_net((4, 6, 3), seed=2 * seed + 1)
        curve = interpolation.barrier_curve(A, B, data, LossKind.CROSS_ENTROPY, grid_size=7)
        assert curve.barrier >= 0.0
        assert curve.barrier_clamped == curve.barrier
        assert curve.barrier_vs_max <= curve.barrier + 1e-12


def test_barrier_curve__rebasin_of_permuted_clone(make_net, data):
    A = make_net((4, 16, 8, 3), seed=3, use_bias=True)
    B = apply_stack(A, random_stack(A.dims, make_rng(5)))
    stack = match_layers(A, B, MatchMethod(kind=MatchKind.NAIVE_WM))
    aligned = interpolation.barrier_curve(A, apply_stack(B, stack), data, LossKind.CROSS_ENTROPY)
    assert aligned.barrier == pytest.approx(0.0, abs=1e-6)


def test_barrier_curve__linear_network_has_no_mse_barrier_below_convexity():
    # Without hidden layers M_t is linear in t, and mse is convex in the
    # outputs, so the path never rises above the endpoint interpolation.
    rng = make_rng(0)
    A = MlpWeights(matrices=[rng.standard_normal((2, 3))])
    B = MlpWeights(matrices=[rng.standard_normal((2, 3))])
    data = Dataset(inputs=rng.standard_normal((3, 20)), targets=rng.standard_normal((2, 20)))
    curve = interpolation.barrier_curve(A, B, data, LossKind.MSE)
    assert curve.barrier == pytest.approx(0.0, abs=1e-12)


def test_barrier_curve__empty_dataset(make_net):
    A = make_net((4, 6, 3))
    empty = Dataset(inputs=np.zeros((4, 0)), targets=np.zeros(0, dtype=int))
    with pytest.raises(ArgumentError):
        interpolation.barrier_curve(A, A, empty, LossKind.CROSS_ENTROPY)


def test_layer_deviations__endpoints(make_net, data):
    A = make_net((4, 6, 5, 3), seed=1)
    B = make_net((4, 6, 5, 3), seed=2)
    report = interpolation.layer_deviations(A, B, data, [0.0, 0.5, 1.0])
    assert len(report.deviation_a) == 2
    for layer in range(2):
        assert report.deviation_a[layer][2] == 0.0
        assert report.deviation_b[layer][0] == 0.0
        assert report.deviation_a[layer][1] >= 0.0
        assert report.energy_a[layer] > 0.0


def test_layer_deviations__rejects_bad_grid(make_net, data):
    A = make_net((4, 6, 3))
    with pytest.raises(ArgumentError):
        interpolation.layer_deviations(A, A, data, [0.5, 0.2])
    with pytest.raises(ArgumentError):
        interpolation.layer_deviations(A, A, data, [-0.1])


def test_output_deviation(make_net, data):
    A = make_net((4, 6, 3), seed=1)
    B = make_net((4, 6, 3), seed=2)
    grid = interpolation.uniform_grid(5)
    assert interpolation.output_deviation(A, A, data.inputs, grid) == pytest.approx(0.0, abs=1e-12)
    assert interpolation.output_deviation(A, B, data.inputs, grid) > 0.0

    linear_a = MlpWeights(matrices=[A.matrices[0]])
    linear_b = MlpWeights(matrices=[B.matrices[0]])
    assert interpolation.output_deviation(
        linear_a, linear_b, data.inputs, grid
    ) == pytest.approx(0.0, abs=1e-12)
