"""Linear paths between two aligned networks.

M_t has weights t W_A + (1 - t) W~_B, where W~_B is network B after
alignment. The error barrier of the path is

    max_t  loss(M_t) - (t loss(A) + (1 - t) loss(B)).
"""

from dataclasses import dataclass

import numpy as np

from lmcot.consts import DEFAULT_GRID_SIZE
from lmcot.enums import Activation, LossKind
from lmcot.errors import ArgumentError
from lmcot.network import Dataset, MlpWeights, forward, loss_value


@dataclass
class BarrierCurve:
    t_grid: list[float]
    #: loss(M_t) for each t in the grid.
    losses: list[float]
    loss_a: float
    loss_b: float
    #: Raw barrier against the mean-interpolated baseline; may be negative.
    barrier: float
    #: max_t loss(M_t) - max(loss_a, loss_b).
    barrier_vs_max: float

    @property
    def barrier_clamped(self) -> float:
        return max(0.0, self.barrier)


@dataclass
class LayerDeviationReport:
    t_grid: list[float]
    #: deviation_a[l - 1][j] = (1/m_l) E |phi_A^l - phi_{M_t}^l|^2 at t = t_grid[j].
    deviation_a: list[list[float]]
    #: deviation_b[l - 1][j] = (1/m_l) E |phi~_B^l - phi_{M_t}^l|^2.
    deviation_b: list[list[float]]
    #: (1/m_l) E |phi_A^l|^2 per hidden layer.
    energy_a: list[float]
    #: (1/m_l) E |phi~_B^l|^2 per hidden layer.
    energy_b: list[float]


def uniform_grid(size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    if size < 3:
        raise ArgumentError(f"A barrier grid needs at least 3 points, got {size}.")
    return np.linspace(0.0, 1.0, size)


def _check_grid(t_grid) -> list[float]:
    grid = [float(t) for t in t_grid]
    if not grid or any(not 0.0 <= t <= 1.0 for t in grid):
        raise ArgumentError("Grid values must lie in [0, 1].")
    if any(a > b for a, b in zip(grid, grid[1:])):
        raise ArgumentError("Grid must be sorted.")
    return grid


def interpolate(A: MlpWeights, B_perm: MlpWeights, t: float) -> MlpWeights:
    """The network with every parameter equal to t A + (1 - t) B_perm."""
    if not 0.0 <= t <= 1.0:
        raise ArgumentError(f"t must lie in [0, 1], got {t}.")
    if A.dims != B_perm.dims or A.has_bias != B_perm.has_bias:
        raise ArgumentError(f"Architectures differ: {A.dims} vs {B_perm.dims}.")
    return A.map(lambda a, b: t * a + (1.0 - t) * b, B_perm)


def barrier_curve(
    A: MlpWeights,
    B_perm: MlpWeights,
    data: Dataset,
    kind: LossKind,
    grid_size: int = DEFAULT_GRID_SIZE,
    activation: Activation = Activation.RELU,
) -> BarrierCurve:
    """Evaluate the loss of M_t on all of `data` along a uniform grid."""
    if data.count == 0:
        raise ArgumentError("Cannot evaluate a barrier on an empty dataset.")
    grid = uniform_grid(grid_size)

    def loss_of(weights: MlpWeights) -> float:
        outputs = forward(weights, data.inputs, activation).outputs
        return loss_value(outputs, data.targets, kind)

    loss_a = loss_of(A)
    loss_b = loss_of(B_perm)
    losses = [loss_of(interpolate(A, B_perm, float(t))) for t in grid]
    baseline = [t * loss_a + (1.0 - t) * loss_b for t in grid]
    barrier = max(loss - base for loss, base in zip(losses, baseline))
    return BarrierCurve(
        t_grid=[float(t) for t in grid],
        losses=losses,
        loss_a=loss_a,
        loss_b=loss_b,
        barrier=float(barrier),
        barrier_vs_max=float(max(losses) - max(loss_a, loss_b)),
    )


def _mean_sq(diff: np.ndarray) -> float:
    """(1/m) E |column|^2 for an m x batch matrix."""
    return float(np.sum(diff * diff) / diff.size)


def layer_deviations(
    A: MlpWeights,
    B_perm: MlpWeights,
    data: Dataset,
    t_grid,
    activation: Activation = Activation.RELU,
) -> LayerDeviationReport:
    """Per-layer mean-square gaps between the endpoint activations and M_t's."""
    if data.count == 0:
        raise ArgumentError("Cannot estimate deviations on an empty dataset.")
    grid = _check_grid(t_grid)
    hidden_a = forward(A, data.inputs, activation).hidden
    hidden_b = forward(B_perm, data.inputs, activation).hidden
    depth = len(hidden_a)

    deviation_a = [[] for _ in range(depth)]
    deviation_b = [[] for _ in range(depth)]
    for t in grid:
        hidden_t = forward(interpolate(A, B_perm, t), data.inputs, activation).hidden
        for layer in range(depth):
            deviation_a[layer].append(_mean_sq(hidden_a[layer] - hidden_t[layer]))
            deviation_b[layer].append(_mean_sq(hidden_b[layer] - hidden_t[layer]))

    return LayerDeviationReport(
        t_grid=grid,
        deviation_a=deviation_a,
        deviation_b=deviation_b,
        energy_a=[_mean_sq(phi) for phi in hidden_a],
        energy_b=[_mean_sq(phi) for phi in hidden_b],
    )


def output_deviation(
    A: MlpWeights,
    B_perm: MlpWeights,
    X,
    t_grid,
    activation: Activation = Activation.RELU,
) -> float:
    """sup over t and inputs of |t f_A(x) + (1 - t) f_B(x) - f_{M_t}(x)|."""
    grid = _check_grid(t_grid)
    out_a = forward(A, X, activation).outputs
    out_b = forward(B_perm, X, activation).outputs
    worst = 0.0
    for t in grid:
        out_t = forward(interpolate(A, B_perm, t), X, activation).outputs
        gap = np.abs(t * out_a + (1.0 - t) * out_b - out_t)
        worst = max(worst, float(gap.max()) if gap.size else 0.0)
    return worst
