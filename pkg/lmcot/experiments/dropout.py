"""Dropout stability of two-layer networks.

For f(x) = (1/N) sum_i s(w_i x) with a 1-Lipschitz activation s, dropping the
second half of the neurons and doubling the rest changes the output by at most
W_1 between the two half-populations of weight rows, for |x| <= 1.
"""

import logging
from dataclasses import dataclass

import numpy as np

from lmcot.assignment import wasserstein
from lmcot.enums import Activation
from lmcot.errors import ArgumentError
from lmcot.network import MlpWeights, activate
from lmcot.numerics import as_matrix

#: Slack on the W_1 inequality for floating point.
GAP_TOLERANCE = 1e-9


@dataclass
class DropoutGap:
    #: Mean over the eval set of |(2/N) sum_{i in A} s(w_i x) - (1/N) sum_i s(w_i x)|.
    drop_error: float
    #: W_1 between the first-half and second-half weight rows.
    w1_bound: float
    #: ``True`` when every eval input lies in the closed unit ball.
    unit_ball: bool

    @property
    def holds(self) -> bool:
        return self.drop_error <= self.w1_bound + GAP_TOLERANCE


def _check_two_layer(weights: MlpWeights) -> int:
    if weights.num_layers != 2:
        raise ArgumentError(f"Need one hidden layer, got {weights.num_layers - 1}.")
    if weights.has_bias:
        raise ArgumentError("Dropout gap is defined for networks without biases.")
    W2 = weights.matrices[1]
    N = W2.shape[1]
    if W2.shape[0] != 1:
        raise ArgumentError(f"Need a scalar output, got {W2.shape[0]} outputs.")
    if N % 2:
        raise ArgumentError(f"Need an even number of neurons, got {N}.")
    if not np.allclose(W2, 1.0 / N, rtol=0.0, atol=1e-12):
        raise ArgumentError("Second layer must be uniform with entries 1/N.")
    return N


def dropout_gap(
    weights: MlpWeights, X, activation: Activation = Activation.RELU
) -> DropoutGap:
    """Compare the effect of dropping half the neurons with its W_1 bound.

    :param X: eval inputs, one column per sample.
    """
    activation = Activation(activation)
    if activation is Activation.SIGMOID:
        raise ArgumentError("Dropout bound needs a 1-Lipschitz activation (relu or tanh).")
    N = _check_two_layer(weights)
    X = as_matrix(X, "X")
    if X.shape[1] == 0:
        raise ArgumentError("Eval set is empty.")

    W1 = weights.matrices[0]
    half = N // 2
    phi = activate(activation, W1 @ X)
    kept = 2.0 / N * phi[:half].sum(axis=0)
    full = phi.sum(axis=0) / N
    drop_error = float(np.mean(np.abs(kept - full)))
    w1_bound = wasserstein(W1[:half], W1[half:], 1)

    unit_ball = bool(np.all(np.linalg.norm(X, axis=0) <= 1.0 + 1e-12))
    gap = DropoutGap(drop_error=drop_error, w1_bound=w1_bound, unit_ball=unit_ball)
    if unit_ball and not gap.holds:
        logging.warning(f"Dropout gap {drop_error:.6g} exceeds W_1 bound {w1_bound:.6g}.")
    return gap


def uniform_two_layer(W1) -> MlpWeights:
    """The network x -> (1/N) sum_i s(w_i x) with rows w_i of `W1`."""
    W1 = as_matrix(W1, "W1")
    N = W1.shape[0]
    return MlpWeights(matrices=[W1, np.full((1, N), 1.0 / N)])
