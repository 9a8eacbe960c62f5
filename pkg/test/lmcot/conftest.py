import numpy as np
import pytest

from lmcot.enums import Activation
from lmcot.network import Architecture, InitScheme, MlpWeights, init_weights
from lmcot.numerics import make_rng


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(1234)


def random_net(
    dims, seed: int = 0, use_bias: bool = False, activation=Activation.RELU
) -> MlpWeights:
    """A gaussian_iid network; biases (if any) are random too."""
    arch = Architecture(dims=tuple(dims), activation=activation, use_bias=use_bias)
    rng = make_rng(seed)
    weights = init_weights(arch, InitScheme(), rng)
    if use_bias:
        weights.biases = [0.1 * rng.standard_normal(d) for d in arch.dims[1:]]
    return weights


@pytest.fixture
def make_net():
    return random_net
