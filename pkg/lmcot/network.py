"""Multilayer perceptrons: forward pass, losses, backpropagation and SGD.

A network with architecture dims (m_0, m_1, ..., m_{L+1}) computes

    f(x) = W^{L+1} s(W^L ... s(W^1 x + b^1) ... + b^L) + b^{L+1}

with a pointwise activation s on every hidden layer and none on the output.
Inputs are stored column-wise: a batch is an m_0 x batch matrix.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_softmax, softmax

from lmcot.enums import Activation, InitKind, LossKind, Schedule
from lmcot.errors import ArgumentError, ConfigurationError, DivergenceError
from lmcot.numerics import CovarianceSpec, as_matrix, gaussian_rows, make_rng, uniform_rows
from lmcot.utils.progress import SilentTaskStatus, TaskStatus


@dataclass(frozen=True)
class Architecture:
    #: Layer widths m_0, m_1, ..., m_{L+1}.
    dims: tuple[int, ...]
    #: Activation on hidden layers.
    activation: Activation = Activation.RELU
    #: If ``True``, every layer has a bias vector.
    use_bias: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "activation", Activation(self.activation))
        if len(self.dims) < 2:
            raise ConfigurationError(f"Need at least input and output dims, got {self.dims}.")
        if any(d < 1 for d in self.dims):
            raise ConfigurationError(f"All dims must be >= 1, got {self.dims}.")

    @property
    def depth(self) -> int:
        """Number of hidden layers L."""
        return len(self.dims) - 2

    @property
    def num_layers(self) -> int:
        """Number of weight matrices L + 1."""
        return len(self.dims) - 1


@dataclass
class MlpWeights:
    """Per-layer weights W^1..W^{L+1} (W^l is m_l x m_{l-1}) and optional biases."""

    matrices: list[np.ndarray]
    biases: list[np.ndarray] | None = None

    @property
    def has_bias(self) -> bool:
        return self.biases is not None

    @property
    def num_layers(self) -> int:
        return len(self.matrices)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.matrices[0].shape[1],) + tuple(W.shape[0] for W in self.matrices)

    def copy(self) -> "MlpWeights":
        return MlpWeights(
            matrices=[W.copy() for W in self.matrices],
            biases=None if self.biases is None else [b.copy() for b in self.biases],
        )

    def parameters(self) -> list[np.ndarray]:
        """All parameter arrays in checkpoint order (each matrix then its bias)."""
        params = []
        for i, W in enumerate(self.matrices):
            params.append(W)
            if self.biases is not None:
                params.append(self.biases[i])
        return params

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def squared_norm(self) -> float:
        return float(sum(np.sum(p * p) for p in self.parameters()))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    def map(self, fn, *others: "MlpWeights") -> "MlpWeights":
        """Apply `fn` to corresponding parameter arrays of self and `others`."""
        matrices = [fn(W, *(o.matrices[i] for o in others)) for i, W in enumerate(self.matrices)]
        biases = None
        if self.biases is not None:
            biases = [fn(b, *(o.biases[i] for o in others)) for i, b in enumerate(self.biases)]
        return MlpWeights(matrices=matrices, biases=biases)

    def check(self, arch: Architecture):
        """Raise if these weights don't fit `arch`."""
        if self.num_layers != arch.num_layers:
            raise ArgumentError(
                f"Expected {arch.num_layers} layers, got {self.num_layers}."
            )
        for i, W in enumerate(self.matrices):
            expected = (arch.dims[i + 1], arch.dims[i])
            if W.shape != expected:
                raise ArgumentError(f"Layer {i + 1} has shape {W.shape}, expected {expected}.")
        if arch.use_bias != self.has_bias:
            raise ArgumentError(f"Architecture use_bias={arch.use_bias} but weights disagree.")
        if self.biases is not None:
            for i, b in enumerate(self.biases):
                if b.shape != (arch.dims[i + 1],):
                    raise ArgumentError(f"Bias {i + 1} has shape {b.shape}.")


@dataclass
class ActivationTrace:
    #: phi^l (m_l x batch) for each hidden layer l = 1..L.
    hidden: list[np.ndarray]
    #: Network outputs (m_{L+1} x batch).
    outputs: np.ndarray
    #: Pre-activations W^l phi^{l-1} + b^l for l = 1..L, kept for backprop.
    preactivations: list[np.ndarray] = field(default_factory=list, repr=False)


@dataclass
class Dataset:
    #: Inputs, one column per sample (m_0 x count).
    inputs: np.ndarray
    #: Targets: an (m_{L+1} x count) matrix for mse, or class indices for
    #: cross-entropy.
    targets: np.ndarray

    @property
    def count(self) -> int:
        return self.inputs.shape[1]

    def batch(self, indices) -> "Dataset":
        targets = self.targets[..., indices]
        return Dataset(inputs=self.inputs[:, indices], targets=targets)

    def head(self, n: int) -> "Dataset":
        return self.batch(np.arange(min(n, self.count)))


@dataclass(frozen=True)
class InitScheme:
    kind: InitKind = InitKind.GAUSSIAN_IID
    #: One covariance spec per layer (block_cov only); dims must match fan-in.
    covariances: tuple[CovarianceSpec, ...] | None = None
    #: Uniform half-width (uniform only).
    half_width: float | None = None


@dataclass(frozen=True)
class TrainConfig:
    #: Number of SGD steps k.
    steps: int
    batch_size: int = 128
    #: Step size epsilon.
    step_size: float = 1e-2
    schedule: Schedule = Schedule.CONSTANT
    #: Decoupled weight decay lambda >= 0.
    weight_decay: float = 0.0
    #: Noise temperature tau >= 0.
    noise_temperature: float = 0.0
    loss: LossKind = LossKind.CROSS_ENTROPY
    #: Seeds the minibatch draws and noise when `train` gets no rng.
    seed: int = 0

    def validate(self):
        if self.steps < 0:
            raise ConfigurationError(f"steps must be >= 0, got {self.steps}.")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}.")
        if not self.step_size > 0:
            raise ConfigurationError(f"step_size must be > 0, got {self.step_size}.")
        if self.weight_decay < 0 or self.noise_temperature < 0:
            raise ConfigurationError("weight_decay and noise_temperature must be >= 0.")

    def step_size_at(self, k: int) -> float:
        """s_k = epsilon * xi(k epsilon); xi is identically 1 for constant schedules."""
        return self.step_size


# Activations
# -----------


def activate(kind: Activation, a: np.ndarray) -> np.ndarray:
    if kind is Activation.RELU:
        return np.maximum(a, 0.0)
    if kind is Activation.SIGMOID:
        return expit(a)
    return np.tanh(a)


def activate_grad(kind: Activation, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation at pre-activation `a`."""
    if kind is Activation.RELU:
        return (a > 0).astype(np.float64)
    if kind is Activation.SIGMOID:
        s = expit(a)
        return s * (1.0 - s)
    t = np.tanh(a)
    return 1.0 - t * t


# Initialization
# --------------


def init_weights(arch: Architecture, scheme: InitScheme, rng: np.random.Generator) -> MlpWeights:
    """Draw each W^l row by row from the law named by `scheme`; biases start at 0."""
    matrices = []
    if scheme.kind is InitKind.BLOCK_COV:
        specs = scheme.covariances or ()
        if len(specs) != arch.num_layers:
            raise ConfigurationError(
                f"block_cov needs {arch.num_layers} covariance specs, got {len(specs)}."
            )
    for i in range(arch.num_layers):
        fan_in, fan_out = arch.dims[i], arch.dims[i + 1]
        if scheme.kind is InitKind.GAUSSIAN_IID:
            W = gaussian_rows(fan_out, CovarianceSpec.isotropic(fan_in, 1.0 / fan_in), rng)
        elif scheme.kind is InitKind.BLOCK_COV:
            spec = scheme.covariances[i]
            if spec.dim != fan_in:
                raise ConfigurationError(
                    f"Layer {i + 1}: covariance has dim {spec.dim}, fan-in is {fan_in}."
                )
            W = gaussian_rows(fan_out, spec, rng)
        else:
            if scheme.half_width is None:
                raise ConfigurationError("uniform init needs a half_width.")
            W = uniform_rows(fan_out, fan_in, scheme.half_width, rng)
        matrices.append(W)

    biases = None
    if arch.use_bias:
        biases = [np.zeros(d) for d in arch.dims[1:]]
    return MlpWeights(matrices=matrices, biases=biases)


# Forward pass and losses
# -----------------------


def forward(weights: MlpWeights, X, activation: Activation = Activation.RELU) -> ActivationTrace:
    """Run the network on the columns of `X`."""
    X = as_matrix(X, "X")
    if X.shape[0] != weights.matrices[0].shape[1]:
        raise ArgumentError(
            f"Input has {X.shape[0]} rows, network expects {weights.matrices[0].shape[1]}."
        )
    activation = Activation(activation)
    hidden, preacts = [], []
    phi = X
    for i, W in enumerate(weights.matrices):
        if W.shape[1] != phi.shape[0]:
            raise ArgumentError(f"Layer {i + 1} expects {W.shape[1]} inputs, got {phi.shape[0]}.")
        a = W @ phi
        if weights.biases is not None:
            a = a + weights.biases[i][:, None]
        if i == weights.num_layers - 1:
            return ActivationTrace(hidden=hidden, outputs=a, preactivations=preacts)
        preacts.append(a)
        phi = activate(activation, a)
        hidden.append(phi)
    raise ArgumentError("A network needs at least one layer.")


def _check_class_targets(outputs: np.ndarray, targets) -> np.ndarray:
    labels = np.asarray(targets)
    if labels.ndim != 1 or labels.size != outputs.shape[1]:
        raise ArgumentError(
            f"Expected {outputs.shape[1]} class indices, got shape {labels.shape}."
        )
    labels = labels.astype(np.intp)
    if labels.size and (labels.min() < 0 or labels.max() >= outputs.shape[0]):
        raise ArgumentError(f"Class index out of range [0, {outputs.shape[0]}).")
    return labels


def _check_regression_targets(outputs: np.ndarray, targets) -> np.ndarray:
    Y = np.asarray(targets, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape != outputs.shape:
        raise ArgumentError(f"Targets have shape {Y.shape}, outputs {outputs.shape}.")
    return Y


def loss_value(outputs, targets, kind: LossKind) -> float:
    """Mean loss over the batch (the columns of `outputs`)."""
    outputs = as_matrix(outputs, "outputs")
    kind = LossKind(kind)
    batch = outputs.shape[1]
    if batch == 0:
        raise ArgumentError("Cannot evaluate a loss on an empty batch.")
    if kind is LossKind.MSE:
        Y = _check_regression_targets(outputs, targets)
        return float(np.sum((outputs - Y) ** 2) / batch)
    labels = _check_class_targets(outputs, targets)
    logp = log_softmax(outputs, axis=0)
    return float(-np.mean(logp[labels, np.arange(batch)]))


def _output_delta(outputs: np.ndarray, targets, kind: LossKind) -> np.ndarray:
    """d(loss)/d(outputs)."""
    batch = outputs.shape[1]
    if kind is LossKind.MSE:
        Y = _check_regression_targets(outputs, targets)
        return 2.0 * (outputs - Y) / batch
    labels = _check_class_targets(outputs, targets)
    delta = softmax(outputs, axis=0)
    delta[labels, np.arange(batch)] -= 1.0
    return delta / batch


def loss_and_grad(
    weights: MlpWeights,
    X,
    targets,
    kind: LossKind,
    activation: Activation = Activation.RELU,
) -> tuple[float, MlpWeights]:
    """Loss and its gradient with respect to every weight and bias."""
    kind = LossKind(kind)
    activation = Activation(activation)
    X = as_matrix(X, "X")
    trace = forward(weights, X, activation)
    loss = loss_value(trace.outputs, targets, kind)

    L1 = weights.num_layers
    grad_W = [None] * L1
    grad_b = [None] * L1 if weights.has_bias else None
    delta = _output_delta(trace.outputs, targets, kind)
    for i in range(L1 - 1, -1, -1):
        inputs = X if i == 0 else trace.hidden[i - 1]
        grad_W[i] = delta @ inputs.T
        if grad_b is not None:
            grad_b[i] = delta.sum(axis=1)
        if i > 0:
            delta = (weights.matrices[i].T @ delta) * activate_grad(
                activation, trace.preactivations[i - 1]
            )
    return loss, MlpWeights(matrices=grad_W, biases=grad_b)


def accuracy(weights: MlpWeights, data: Dataset, activation: Activation) -> float:
    outputs = forward(weights, data.inputs, activation).outputs
    return float(np.mean(np.argmax(outputs, axis=0) == np.asarray(data.targets)))


# Training
# --------


def train(
    weights: MlpWeights,
    data: Dataset,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    activation: Activation = Activation.RELU,
    task_status: TaskStatus | None = None,
) -> tuple[MlpWeights, list[float]]:
    """Noisy regularized minibatch SGD.

    Each step samples a minibatch with replacement and applies

        theta <- (1 - 2 lambda s) theta - s grad + sqrt(2 s tau / d) g

    where d is the total parameter count and g ~ N(0, I). With lambda = tau = 0
    this is plain SGD. The noise term for networks deeper than two layers is
    experimental.

    :param rng: minibatch and noise stream; defaults to ``make_rng(cfg.seed)``.
    :return: the trained weights and the minibatch loss at every step.
    """
    cfg.validate()
    rng = make_rng(cfg.seed) if rng is None else rng
    if data.count < 1:
        raise ArgumentError("Cannot train on an empty dataset.")
    task_status = task_status or SilentTaskStatus()

    current = weights.copy()
    d_total = current.parameter_count()
    log = []
    for k in range(cfg.steps):
        s = cfg.step_size_at(k)
        idx = rng.integers(0, data.count, size=cfg.batch_size)
        batch = data.batch(idx)
        loss, grads = loss_and_grad(current, batch.inputs, batch.targets, cfg.loss, activation)
        log.append(loss)

        decay = 1.0 - 2.0 * cfg.weight_decay * s
        current = current.map(lambda p, g: decay * p - s * g, grads)
        if cfg.noise_temperature > 0:
            noise_scale = np.sqrt(2.0 * s * cfg.noise_temperature / d_total)
            current = current.map(lambda p: p + noise_scale * rng.standard_normal(p.shape))

        if not current.is_finite():
            raise DivergenceError(f"Non-finite parameter after step {k} (loss {loss:.4g}).")
        if (k + 1) % 100 == 0 or k + 1 == cfg.steps:
            task_status.progress(k + 1, cfg.steps)

    if cfg.steps:
        logging.info(f"Trained {cfg.steps} steps; final minibatch loss {log[-1]:.4f}.")
    return current, log
