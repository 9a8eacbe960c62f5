"""Two-layer networks in the mean-field regime.

A network is N particles theta_i = (w_i, a_i) in R^{d+1} computing

    f(x) = (1/N) sum_i a_i s(<w_i, x>).

Each SGD step draws one fresh sample (x, y) and moves every particle by

    theta_i <- (1 - 2 lambda s) theta_i + 2 s (y - f(x)) grad_theta [a_i s(<w_i, x>)]
               + sqrt(2 s tau / (d + 1)) g_i

so that the particles follow the mean-field dynamics as N grows. Two networks
trained independently for the same time T should, after matching their
particles, be linearly connected up to an error that shrinks with N.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from lmcot.assignment import assignment_cost, pairwise_sq_dist, solve_lap
from lmcot.consts import DEFAULT_GRID_SIZE
from lmcot.data.synthetic import make_target_regression
from lmcot.enums import Activation, LossKind
from lmcot.errors import ConfigurationError, DivergenceError
from lmcot.experiments.runner import run_trials
from lmcot.interpolation import barrier_curve, output_deviation, uniform_grid
from lmcot.network import MlpWeights, activate, activate_grad
from lmcot.numerics import child_seed, make_rng
from lmcot.utils.progress import SilentTaskStatus, TaskStatus


@dataclass(frozen=True)
class MeanFieldConfig:
    #: Input dimension.
    d: int = 4
    #: Number of hidden units.
    N: int = 256
    #: Training time; the run takes round(T / step_size) steps.
    T: float = 2.0
    step_size: float = 1e-2
    weight_decay: float = 0.0
    noise_temperature: float = 0.0
    activation: Activation = Activation.TANH
    #: Particles start i.i.d. uniform on [-h, h]^{d+1}.
    init_half_width: float = 1.0
    #: If ``True``, B starts from A's initial draw instead of an independent one.
    shared_init: bool = False
    eval_size: int = 512
    grid_size: int = DEFAULT_GRID_SIZE

    @property
    def steps(self) -> int:
        return int(round(self.T / self.step_size))

    def validate(self):
        if self.d < 1 or self.N < 1:
            raise ConfigurationError(f"d and N must be >= 1, got d={self.d}, N={self.N}.")
        if Activation(self.activation) is Activation.RELU:
            raise ConfigurationError("Mean-field runs need a bounded activation (tanh or sigmoid).")
        if not self.T > 0 or not self.step_size > 0:
            raise ConfigurationError("T and step_size must be positive.")
        if self.weight_decay < 0 or self.noise_temperature < 0:
            raise ConfigurationError("weight_decay and noise_temperature must be >= 0.")
        if not self.init_half_width > 0:
            raise ConfigurationError("init_half_width must be positive.")
        if self.eval_size < 1:
            raise ConfigurationError("eval_size must be >= 1.")


@dataclass
class MeanFieldReport:
    N: int
    d: int
    T: float
    step_size: float
    weight_decay: float
    noise_temperature: float
    #: sup over the grid and eval set of |t f_A + (1 - t) f_B - f_{M_t}|, after matching.
    deviation_matched: float
    #: The same with the identity permutation.
    deviation_unmatched: float
    barrier_matched: float
    barrier_unmatched: float
    #: W_2^2 between the particle measures (optimal pairing).
    w2sq_matched: float
    #: Mean squared particle distance under the identity pairing.
    w2sq_identity: float
    loss_a: float
    loss_b: float


@dataclass
class Particles:
    #: Hidden weights, N x d.
    w: np.ndarray
    #: Output weights, length N.
    a: np.ndarray

    @property
    def N(self) -> int:
        return self.w.shape[0]

    def stacked(self) -> np.ndarray:
        """Rows (w_i, a_i) in R^{d+1}."""
        return np.hstack([self.w, self.a[:, None]])

    def permuted(self, perm: np.ndarray) -> "Particles":
        return Particles(w=self.w[perm], a=self.a[perm])

    def to_weights(self) -> MlpWeights:
        """The same function as an :class:`MlpWeights` with W^2 = a / N."""
        return MlpWeights(matrices=[self.w.copy(), (self.a / self.N)[None, :]])


def init_particles(cfg: MeanFieldConfig, rng: np.random.Generator) -> Particles:
    h = cfg.init_half_width
    theta = rng.uniform(-h, h, size=(cfg.N, cfg.d + 1))
    return Particles(w=theta[:, :-1].copy(), a=theta[:, -1].copy())


def meanfield_output(p: Particles, X: np.ndarray, activation: Activation) -> np.ndarray:
    return p.a @ activate(activation, p.w @ X) / p.N


def train_particles(
    p: Particles,
    cfg: MeanFieldConfig,
    data_rng: np.random.Generator,
    task_status: TaskStatus | None = None,
) -> Particles:
    """Online SGD for cfg.steps steps, one fresh sample per step."""
    task_status = task_status or SilentTaskStatus()
    activation = Activation(cfg.activation)
    s = cfg.step_size
    decay = 1.0 - 2.0 * cfg.weight_decay * s
    noise_scale = math.sqrt(2.0 * s * cfg.noise_temperature / (cfg.d + 1))
    stream = make_target_regression(cfg.d, cfg.steps, data_rng)

    w, a = p.w.copy(), p.a.copy()
    for k in range(cfg.steps):
        x = stream.inputs[:, k]
        y = stream.targets[0, k]
        pre = w @ x
        phi = activate(activation, pre)
        residual = y - a @ phi / cfg.N

        grad_a = phi
        grad_w = (a * activate_grad(activation, pre))[:, None] * x[None, :]
        a = decay * a + 2.0 * s * residual * grad_a
        w = decay * w + 2.0 * s * residual * grad_w
        if noise_scale > 0:
            a = a + noise_scale * data_rng.standard_normal(a.shape)
            w = w + noise_scale * data_rng.standard_normal(w.shape)

        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(w))):
            raise DivergenceError(f"Non-finite particle after step {k}.")
        if (k + 1) % 1000 == 0 or k + 1 == cfg.steps:
            task_status.progress(k + 1, cfg.steps)
    return Particles(w=w, a=a)


def meanfield_lmc(
    cfg: MeanFieldConfig,
    seed_a: int,
    seed_b: int,
    task_status: TaskStatus | None = None,
) -> MeanFieldReport:
    """Train two mean-field networks, match their particles, and measure the path.

    Run X uses ``make_rng(seed_X, 0)`` for its initial draw and
    ``make_rng(seed_X, 1)`` for its data stream and noise. The eval set comes
    from ``make_rng(seed_a, 2)``.
    """
    cfg.validate()
    activation = Activation(cfg.activation)

    init_a = init_particles(cfg, make_rng(seed_a, 0))
    init_b = init_particles(cfg, make_rng(seed_a if cfg.shared_init else seed_b, 0))
    A = train_particles(init_a, cfg, make_rng(seed_a, 1), task_status)
    B = train_particles(init_b, cfg, make_rng(seed_b, 1), task_status)

    C = pairwise_sq_dist(A.stacked(), B.stacked())
    perm, matched_cost = solve_lap(C)
    identity_cost = assignment_cost(C, np.arange(cfg.N))
    B_matched = B.permuted(perm)

    evalset = make_target_regression(cfg.d, cfg.eval_size, make_rng(seed_a, 2))
    grid = uniform_grid(cfg.grid_size)
    wa, wb, wb_matched = A.to_weights(), B.to_weights(), B_matched.to_weights()

    matched = barrier_curve(wa, wb_matched, evalset, LossKind.MSE, cfg.grid_size, activation)
    unmatched = barrier_curve(wa, wb, evalset, LossKind.MSE, cfg.grid_size, activation)
    report = MeanFieldReport(
        N=cfg.N,
        d=cfg.d,
        T=cfg.T,
        step_size=cfg.step_size,
        weight_decay=cfg.weight_decay,
        noise_temperature=cfg.noise_temperature,
        deviation_matched=output_deviation(wa, wb_matched, evalset.inputs, grid, activation),
        deviation_unmatched=output_deviation(wa, wb, evalset.inputs, grid, activation),
        barrier_matched=matched.barrier,
        barrier_unmatched=unmatched.barrier,
        w2sq_matched=matched_cost / cfg.N,
        w2sq_identity=identity_cost / cfg.N,
        loss_a=matched.loss_a,
        loss_b=matched.loss_b,
    )
    logging.info(
        f"Mean-field N={cfg.N}: deviation {report.deviation_matched:.4g} matched, "
        f"{report.deviation_unmatched:.4g} unmatched."
    )
    return report


def _sweep_job(cfg: MeanFieldConfig, seed: int, job: tuple[int, int]) -> MeanFieldReport:
    N, index = job
    return meanfield_lmc(
        replace(cfg, N=N), child_seed(seed, 2 * index), child_seed(seed, 2 * index + 1)
    )


def meanfield_sweep(
    cfg: MeanFieldConfig,
    widths,
    pairs: int,
    seed: int,
    threads: int = 1,
    task_status: TaskStatus | None = None,
) -> list[MeanFieldReport]:
    """Run `pairs` independent network pairs at every width in `widths`.

    Pair i uses the child seeds 2i and 2i + 1 of `seed` at every width, so
    widths are compared on the same seeds.
    """
    if pairs < 1:
        raise ConfigurationError(f"Need at least one pair, got {pairs}.")
    jobs = [(int(N), i) for N in widths for i in range(pairs)]
    return run_trials(partial(_sweep_job, cfg, seed), jobs, threads, task_status)
