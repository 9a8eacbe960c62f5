"""Barriers between random networks as the hidden width grows.

At initialization, two gaussian_iid networks are i.i.d. draws from the same
row law, so after weight matching their hidden layers are close in W_2 and the
midpoint network tracks the averaged outputs more and more closely with width.

The readout of both networks is the fixed average 1/width over the last hidden
layer, so the two endpoint functions agree up to O(width^-1/2). The targets are
y = |x|, which lie above every output of a ReLU network drawn this way; along
the path the squared loss then grows to first order in how far the midpoint
falls below the averaged outputs, and the barrier is positive.
"""

import logging
from dataclasses import dataclass
from functools import partial

import numpy as np

from lmcot.consts import DEFAULT_GRID_SIZE
from lmcot.data.synthetic import make_norm_regression
from lmcot.enums import Activation, InitKind, LossKind, MatchKind
from lmcot.errors import ConfigurationError
from lmcot.experiments.runner import run_trials
from lmcot.interpolation import barrier_curve, output_deviation, uniform_grid
from lmcot.matching import MatchMethod, apply_stack, match_layers
from lmcot.network import Architecture, InitScheme, MlpWeights, init_weights
from lmcot.numerics import make_rng
from lmcot.utils.progress import TaskStatus


@dataclass
class WidthInstance:
    width: int
    seed_index: int
    barrier_matched: float
    barrier_unmatched: float
    deviation_matched: float
    deviation_unmatched: float


@dataclass
class WidthPoint:
    width: int
    #: Medians over seeds.
    barrier_matched: float
    barrier_unmatched: float
    deviation_matched: float
    deviation_unmatched: float


@dataclass(frozen=True)
class WidthSweepConfig:
    input_dim: int = 5
    output_dim: int = 1
    #: Number of hidden layers.
    depth: int = 1
    activation: Activation = Activation.RELU
    eval_size: int = 512
    grid_size: int = DEFAULT_GRID_SIZE

    def architecture(self, width: int) -> Architecture:
        dims = (self.input_dim,) + (width,) * self.depth + (self.output_dim,)
        return Architecture(dims=dims, activation=self.activation)


def _averaging_net(arch: Architecture, rng: np.random.Generator) -> MlpWeights:
    weights = init_weights(arch, InitScheme(kind=InitKind.GAUSSIAN_IID), rng)
    out, width = weights.matrices[-1].shape
    weights.matrices[-1] = np.full((out, width), 1.0 / width)
    return weights


def _width_trial(cfg: WidthSweepConfig, seed: int, job: tuple[int, int]) -> WidthInstance:
    width, index = job
    arch = cfg.architecture(width)
    A = _averaging_net(arch, make_rng(seed, width, index, 0))
    B = _averaging_net(arch, make_rng(seed, width, index, 1))
    # The eval set only depends on the seed index, so every width sees the same inputs.
    data = make_norm_regression(cfg.input_dim, cfg.eval_size, make_rng(seed, index))
    if cfg.output_dim != 1:
        data.targets = np.repeat(data.targets, cfg.output_dim, axis=0)

    stack = match_layers(A, B, MatchMethod(kind=MatchKind.NAIVE_WM))
    B_matched = apply_stack(B, stack)
    grid = uniform_grid(cfg.grid_size)
    activation = arch.activation
    return WidthInstance(
        width=width,
        seed_index=index,
        barrier_matched=barrier_curve(
            A, B_matched, data, LossKind.MSE, cfg.grid_size, activation
        ).barrier,
        barrier_unmatched=barrier_curve(
            A, B, data, LossKind.MSE, cfg.grid_size, activation
        ).barrier,
        deviation_matched=output_deviation(A, B_matched, data.inputs, grid, activation),
        deviation_unmatched=output_deviation(A, B, data.inputs, grid, activation),
    )


def width_sweep(
    cfg: WidthSweepConfig,
    widths,
    seeds: int,
    seed: int,
    threads: int = 1,
    task_status: TaskStatus | None = None,
) -> tuple[list[WidthPoint], list[WidthInstance]]:
    """Matched and unmatched barriers of random network pairs at each width.

    :param seeds: number of independent pairs per width.
    :return: per-width medians, and every instance.
    """
    widths = [int(w) for w in widths]
    if seeds < 1 or not widths or min(widths) < 1:
        raise ConfigurationError(f"Need seeds >= 1 and positive widths, got {seeds}, {widths}.")
    jobs = [(w, i) for w in widths for i in range(seeds)]
    instances = run_trials(partial(_width_trial, cfg, seed), jobs, threads, task_status)

    points = []
    for w in widths:
        group = [inst for inst in instances if inst.width == w]
        points.append(
            WidthPoint(
                width=w,
                barrier_matched=float(np.median([g.barrier_matched for g in group])),
                barrier_unmatched=float(np.median([g.barrier_unmatched for g in group])),
                deviation_matched=float(np.median([g.deviation_matched for g in group])),
                deviation_unmatched=float(np.median([g.deviation_unmatched for g in group])),
            )
        )
        logging.info(
            f"Width {w}: median deviation {points[-1].deviation_matched:.4g} matched, "
            f"{points[-1].deviation_unmatched:.4g} unmatched."
        )
    return points, instances
