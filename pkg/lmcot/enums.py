from enum import Enum


class Activation(str, Enum):
    """Pointwise nonlinearities for hidden layers."""

    #: 1-Lipschitz with relu(0) = 0.
    RELU = "relu"
    #: Bounded, 1/4-Lipschitz.
    SIGMOID = "sigmoid"
    #: Bounded, 1-Lipschitz.
    TANH = "tanh"


class LossKind(str, Enum):
    """Training and evaluation losses."""

    #: Mean over the batch of the squared Euclidean error.
    MSE = "mse"
    #: Mean negative log-softmax of the true class.
    CROSS_ENTROPY = "cross_entropy"


class InitKind(str, Enum):
    """Weight initialization laws."""

    #: Rows i.i.d. N(0, I / fan_in).
    GAUSSIAN_IID = "gaussian_iid"
    #: Rows i.i.d. N(0, Diag(lambda_1 I_p1, ...)), one spec per layer.
    BLOCK_COV = "block_cov"
    #: Entries i.i.d. uniform on [-h, h].
    UNIFORM = "uniform"


class MatchKind(str, Enum):
    """Layer-wise alignment methods."""

    #: Euclidean distance between weight rows.
    NAIVE_WM = "naive_wm"
    #: Weight rows compared under the upstream activation second moment.
    COV_WM = "cov_wm"
    #: Euclidean distance between activation vectors on a probe batch.
    ACTIVATION_M = "activation_m"

    @property
    def needs_probe(self) -> bool:
        return self is not MatchKind.NAIVE_WM


class Schedule(str, Enum):
    """Step-size schedules. Only constant steps are implemented."""

    CONSTANT = "constant"
