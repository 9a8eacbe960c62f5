from dataclasses import replace

import numpy as np
import pytest

from lmcot import network
from lmcot.enums import Activation, InitKind, LossKind
from lmcot.errors import ArgumentError, ConfigurationError, DivergenceError
from lmcot.matching import apply_stack, random_stack
from lmcot.network import Architecture, Dataset, InitScheme, MlpWeights, TrainConfig
from lmcot.numerics import CovarianceSpec, make_rng


def test_architecture__validates():
    arch = Architecture(dims=(3, 4, 2))
    assert arch.depth == 1
    assert arch.num_layers == 2
    with pytest.raises(ConfigurationError):
        Architecture(dims=(3,))
    with pytest.raises(ConfigurationError):
        Architecture(dims=(3, 0, 2))


def test_init_weights__gaussian_iid_shapes_and_scale():
    arch = Architecture(dims=(400, 300, 2), use_bias=True)
    weights = network.init_weights(arch, InitScheme(), make_rng(0))
    weights.check(arch)
    assert weights.matrices[0].var() == pytest.approx(1.0 / 400, rel=0.05)
    assert all(np.all(b == 0) for b in weights.biases)
    assert weights.parameter_count() == 400 * 300 + 300 + 300 * 2 + 2


def test_init_weights__block_cov():
    arch = Architecture(dims=(3, 2, 1))
    scheme = InitScheme(
        kind=InitKind.BLOCK_COV,
        covariances=(CovarianceSpec((1, 2), (1.0, 0.0)), CovarianceSpec.isotropic(2)),
    )
    weights = network.init_weights(arch, scheme, make_rng(0))
    assert np.all(weights.matrices[0][:, 1:] == 0)

    bad = InitScheme(kind=InitKind.BLOCK_COV, covariances=(CovarianceSpec.isotropic(5),))
    with pytest.raises(ConfigurationError):
        network.init_weights(arch, bad, make_rng(0))


def test_init_weights__uniform():
    arch = Architecture(dims=(3, 2, 1))
    weights = network.init_weights(
        arch, InitScheme(kind=InitKind.UNIFORM, half_width=0.1), make_rng(0)
    )
    assert all(np.all(np.abs(W) <= 0.1) for W in weights.matrices)
    with pytest.raises(ConfigurationError):
        network.init_weights(arch, InitScheme(kind=InitKind.UNIFORM), make_rng(0))


def test_forward__by_hand():
    weights = MlpWeights(
        matrices=[np.array([[1.0, -1.0], [2.0, 0.0]]), np.array([[1.0, 1.0]])],
        biases=[np.array([0.0, -1.0]), np.array([0.5])],
    )
    trace = network.forward(weights, np.array([[1.0], [2.0]]))
    # Pre-activations (-1, 1) -> relu (0, 1) -> 0 + 1 + 0.5.
    assert trace.hidden[0][:, 0].tolist() == [0.0, 1.0]
    assert trace.outputs.tolist() == [[1.5]]


def test_forward__shape_mismatch(make_net):
    with pytest.raises(ArgumentError):
        network.forward(make_net((3, 4, 2)), np.zeros((2, 5)))


@pytest.mark.parametrize(
    ["outputs", "targets", "kind", "expected"],
    [
        (np.array([[1.0, 3.0]]), np.array([[0.0, 1.0]]), LossKind.MSE, 2.5),
        (np.zeros((2, 1)), np.array([1]), LossKind.CROSS_ENTROPY, np.log(2.0)),
    ],
)
def test_loss_value(outputs, targets, kind, expected):
    assert network.loss_value(outputs, targets, kind) == pytest.approx(expected)


def test_loss_value__bad_targets():
    with pytest.raises(ArgumentError):
        network.loss_value(np.zeros((2, 1)), np.array([2]), LossKind.CROSS_ENTROPY)
    with pytest.raises(ArgumentError):
        network.loss_value(np.zeros((2, 0)), np.zeros((2, 0)), LossKind.MSE)


def _flat_loss(weights, X, targets, kind, activation):
    outputs = network.forward(weights, X, activation).outputs
    return network.loss_value(outputs, targets, kind)


@pytest.mark.parametrize("kind", list(LossKind))
@pytest.mark.parametrize("activation", list(Activation))
def test_loss_and_grad__matches_finite_differences(kind, activation, make_net):
    rng = make_rng(5)
    weights = make_net((3, 4, 5, 2), seed=11, use_bias=True, activation=activation)
    X = rng.standard_normal((3, 6))
    if kind is LossKind.MSE:
        targets = rng.standard_normal((2, 6))
    else:
        targets = rng.integers(0, 2, size=6)

    _, grads = network.loss_and_grad(weights, X, targets, kind, activation)
    h = 1e-6
    for param, grad in zip(weights.parameters(), grads.parameters()):
        for idx in np.ndindex(param.shape):
            saved = param[idx]
            param[idx] = saved + h
            up = _flat_loss(weights, X, targets, kind, activation)
            param[idx] = saved - h
            down = _flat_loss(weights, X, targets, kind, activation)
            param[idx] = saved
            numeric = (up - down) / (2 * h)
            assert abs(numeric - grad[idx]) <= 1e-4 * max(1.0, abs(numeric))


def test_apply_stack__preserves_outputs(make_net):
    rng = make_rng(3)
    weights = make_net((5, 7, 6, 3), seed=1, use_bias=True)
    X = rng.standard_normal((5, 100))
    expected = network.forward(weights, X).outputs
    for _ in range(20):
        permuted = apply_stack(weights, random_stack(weights.dims, rng))
        assert np.allclose(network.forward(permuted, X).outputs, expected, atol=1e-9)


def test_dataset__batch_and_head():
    data = Dataset(inputs=np.arange(6.0).reshape(2, 3), targets=np.array([0, 1, 2]))
    assert data.count == 3
    batch = data.batch(np.array([2, 0]))
    assert batch.inputs.tolist() == [[2.0, 0.0], [5.0, 3.0]]
    assert batch.targets.tolist() == [2, 0]
    assert data.head(10).count == 3


def _regression_data(seed=0, count=64):
    rng = make_rng(seed)
    X = rng.standard_normal((3, count))
    return Dataset(inputs=X, targets=np.sin(X[:1]))


def test_train__reduces_loss(make_net):
    weights = make_net((3, 16, 1), seed=2)
    data = _regression_data()
    cfg = TrainConfig(steps=300, batch_size=16, step_size=0.05, loss=LossKind.MSE)
    before = _flat_loss(weights, data.inputs, data.targets, LossKind.MSE, Activation.RELU)
    trained, log = network.train(weights, data, cfg, make_rng(1))
    after = _flat_loss(trained, data.inputs, data.targets, LossKind.MSE, Activation.RELU)
    assert len(log) == 300
    assert after < before


def test_train__deterministic(make_net):
    weights = make_net((3, 8, 1), seed=2)
    data = _regression_data()
    cfg = TrainConfig(steps=20, batch_size=8, loss=LossKind.MSE, noise_temperature=0.1)
    a, _ = network.train(weights, data, cfg, make_rng(9))
    b, _ = network.train(weights, data, cfg, make_rng(9))
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))


def test_train__seeded_from_config(make_net):
    weights = make_net((3, 8, 1), seed=2)
    data = _regression_data()
    cfg = TrainConfig(steps=20, batch_size=8, loss=LossKind.MSE, noise_temperature=0.1, seed=5)
    a, log_a = network.train(weights, data, cfg)
    b, log_b = network.train(weights, data, cfg, make_rng(5))
    c, log_c = network.train(weights, data, replace(cfg, seed=6))
    assert log_a == log_b
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))
    assert log_a != log_c


def test_train__zero_steps_is_identity(make_net):
    weights = make_net((3, 8, 1), seed=2)
    trained, log = network.train(weights, _regression_data(), TrainConfig(steps=0), make_rng(0))
    assert log == []
    assert all(np.array_equal(p, q) for p, q in zip(trained.parameters(), weights.parameters()))


def test_train__weight_decay_shrinks_norm_without_signal(make_net):
    weights = make_net((3, 8, 1), seed=2)
    data = Dataset(inputs=np.zeros((3, 4)), targets=np.zeros((1, 4)))
    cfg = TrainConfig(steps=10, batch_size=4, step_size=0.1, weight_decay=0.5, loss=LossKind.MSE)
    trained, _ = network.train(weights, data, cfg, make_rng(0))
    # Zero inputs give zero gradients, so each step scales by (1 - 2 * 0.5 * 0.1).
    assert trained.squared_norm() == pytest.approx(0.9**20 * weights.squared_norm())


def test_train__diverges():
    # A linear model on huge inputs: every step multiplies the error by about -6e7.
    weights = MlpWeights(matrices=[np.full((1, 3), 0.1)])
    data = Dataset(inputs=1e3 * np.ones((3, 4)), targets=np.zeros((1, 4)))
    cfg = TrainConfig(steps=200, batch_size=4, step_size=10.0, loss=LossKind.MSE)
    with pytest.raises(DivergenceError):
        network.train(weights, data, cfg, make_rng(0))


def test_train_config__validate():
    with pytest.raises(ConfigurationError):
        TrainConfig(steps=1, step_size=0.0).validate()
    with pytest.raises(ConfigurationError):
        TrainConfig(steps=1, weight_decay=-1.0).validate()


def test_accuracy():
    weights = MlpWeights(matrices=[np.eye(2)])
    data = Dataset(inputs=np.array([[1.0, 0.0], [0.0, 1.0]]), targets=np.array([0, 0]))
    assert network.accuracy(weights, data, Activation.RELU) == 0.5


@pytest.mark.parametrize(
    ["kind", "lipschitz"],
    [(Activation.RELU, 1.0), (Activation.TANH, 1.0), (Activation.SIGMOID, 0.25)],
)
def test_activate__lipschitz(rng, kind, lipschitz):
    a = 5.0 * rng.standard_normal(10000)
    b = 5.0 * rng.standard_normal(10000)
    gap = np.abs(network.activate(kind, a) - network.activate(kind, b))
    assert np.all(gap <= lipschitz * np.abs(a - b) + 1e-12)
