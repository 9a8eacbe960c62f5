import numpy as np
import pytest

from lmcot.data import synthetic
from lmcot.errors import ConfigurationError
from lmcot.network import Architecture, InitScheme, TrainConfig, accuracy, init_weights, train
from lmcot.numerics import approx_dim, make_rng, second_moment


def test_make_classification__shapes():
    data = synthetic.make_classification(200, make_rng(0), input_dim=30, classes=4, latent_dim=3)
    assert data.inputs.shape == (30, 200)
    assert data.targets.shape == (200,)
    assert data.targets.dtype == np.intp
    assert set(data.targets.tolist()) <= {0, 1, 2, 3}


def test_make_classification__deterministic():
    a = synthetic.make_classification(50, make_rng(5), input_dim=10)
    b = synthetic.make_classification(50, make_rng(5), input_dim=10)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.targets, b.targets)


def test_make_classification__default_latent_dim_fits_small_inputs():
    data = synthetic.make_classification(20, make_rng(0), input_dim=4)
    assert data.inputs.shape == (4, 20)
    assert np.linalg.matrix_rank(data.inputs) == 4


def test_make_classification__is_learnable():
    data = synthetic.make_classification(
        512, make_rng(3), input_dim=50, classes=4, latent_dim=4
    )
    arch = Architecture(dims=(50, 32, 4))
    weights = init_weights(arch, InitScheme(), make_rng(4))
    cfg = TrainConfig(steps=300, batch_size=32, step_size=0.1, seed=5)
    before = accuracy(weights, data, arch.activation)
    trained, _ = train(weights, data, cfg)
    # Chance is 0.25.
    assert accuracy(trained, data, arch.activation) > 0.6
    assert accuracy(trained, data, arch.activation) > before


def test_make_classification__low_dimensional_without_noise():
    data = synthetic.make_classification(
        500, make_rng(1), input_dim=40, latent_dim=4, noise=0.0
    )
    assert np.linalg.matrix_rank(data.inputs) == 4
    assert approx_dim(second_moment(data.inputs)) <= 4.0 + 1e-9


def test_make_classification__rejects_bad_shapes():
    with pytest.raises(ConfigurationError):
        synthetic.make_classification(10, make_rng(0), input_dim=3, latent_dim=4)
    with pytest.raises(ConfigurationError):
        synthetic.make_classification(10, make_rng(0), classes=1)
    with pytest.raises(ConfigurationError):
        synthetic.make_classification(10, make_rng(0), noise=-0.1)
    with pytest.raises(ConfigurationError):
        synthetic.make_classification(10, make_rng(0), separation=0.0)


def test_make_target_regression():
    data = synthetic.make_target_regression(3, 100, make_rng(0))
    assert data.inputs.shape == (3, 100)
    assert data.targets.shape == (1, 100)
    assert np.all(np.abs(data.inputs) <= 1.0)
    expected = np.tanh(synthetic.target_direction(3) @ data.inputs)
    assert np.allclose(data.targets[0], expected)
    assert np.linalg.norm(synthetic.target_direction(7)) == pytest.approx(1.0)


def test_make_norm_regression():
    data = synthetic.make_norm_regression(5, 50, make_rng(1))
    assert data.inputs.shape == (5, 50)
    assert np.allclose(data.targets[0], np.linalg.norm(data.inputs, axis=0))
    with pytest.raises(ConfigurationError):
        synthetic.make_norm_regression(0, 5, make_rng(1))


def test_unit_ball_inputs():
    X = synthetic.unit_ball_inputs(4, 500, make_rng(2))
    assert X.shape == (4, 500)
    norms = np.linalg.norm(X, axis=0)
    assert np.all(norms <= 1.0 + 1e-12)
    assert norms.max() > 0.8
