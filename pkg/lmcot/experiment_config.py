"""Experiment documents: one JSON object per run, validated per command.

Unknown keys are rejected, and input files must exist when the document is
parsed. :func:`serialize` returns the normalized document with every default
filled in, so ``serialize(parse(command, doc))`` is what gets echoed next to a
run's results.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, FilePath, model_validator

from lmcot.consts import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_GRID_SIZE,
    DEFAULT_PROBE_SIZE,
)
from lmcot.enums import Activation, InitKind, LossKind, MatchKind, Schedule
from lmcot.network import Architecture, InitScheme, TrainConfig
from lmcot.numerics import CovarianceSpec

#: Largest accepted seed (seeds are unsigned 64-bit integers).
MAX_SEED = 2**64 - 1

MList = list[int]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class _Command(_Model):
    seed: int = Field(0, ge=0, le=MAX_SEED)


# Building blocks
# ---------------


class ArchitectureModel(_Model):
    dims: list[int] = Field(min_length=2)
    activation: Activation = Activation.RELU
    use_bias: bool = False

    def build(self) -> Architecture:
        return Architecture(
            dims=tuple(self.dims), activation=self.activation, use_bias=self.use_bias
        )


class CovarianceModel(_Model):
    group_sizes: list[int] = Field(min_length=1)
    eigenvalues: list[float] = Field(min_length=1)

    def build(self) -> CovarianceSpec:
        spec = CovarianceSpec(
            group_sizes=tuple(self.group_sizes), eigenvalues=tuple(self.eigenvalues)
        )
        spec.validate()
        return spec


class InitModel(_Model):
    kind: InitKind = InitKind.GAUSSIAN_IID
    covariances: list[CovarianceModel] | None = None
    half_width: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind is InitKind.BLOCK_COV and not self.covariances:
            raise ValueError("block_cov init needs covariances")
        if self.kind is InitKind.UNIFORM and self.half_width is None:
            raise ValueError("uniform init needs half_width")
        return self

    def build(self) -> InitScheme:
        covariances = None
        if self.covariances:
            covariances = tuple(c.build() for c in self.covariances)
        return InitScheme(kind=self.kind, covariances=covariances, half_width=self.half_width)


class TrainModel(_Model):
    steps: int = Field(ge=0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    step_size: float = Field(1e-2, gt=0)
    schedule: Schedule = Schedule.CONSTANT
    weight_decay: float = Field(0.0, ge=0)
    noise_temperature: float = Field(0.0, ge=0)
    loss: LossKind = LossKind.CROSS_ENTROPY

    def build(self, seed: int) -> TrainConfig:
        return TrainConfig(seed=seed, **self.model_dump())


class DataModel(_Model):
    """Where samples come from.

    - ``mnist``: IDX files. When no paths are given, the standard file names are
      looked up in the configured data directory, and the synthetic generator
      is used if they are missing. The test split (``test_images``,
      ``test_labels``, else the standard t10k names next to the training
      files) is used for held-out evaluation.
    - ``synth``: :func:`lmcot.data.synthetic.make_classification`.
    - ``gaussian``: standard normal inputs (probes only).
    """

    source: Literal["mnist", "synth", "gaussian"] = "synth"
    images: FilePath | None = None
    labels: FilePath | None = None
    test_images: FilePath | None = None
    test_labels: FilePath | None = None
    #: Number of samples to keep (MNIST) or to generate (synth, gaussian).
    count: int | None = Field(None, ge=1)
    input_dim: int = Field(784, ge=1)
    classes: int = Field(10, ge=2)
    #: Defaults to min(16, input_dim).
    latent_dim: int | None = Field(None, ge=1)
    noise: float = Field(0.1, ge=0)
    separation: float = Field(2.5, gt=0)

    @model_validator(mode="after")
    def _check_paths(self):
        if (self.images is None) != (self.labels is None):
            raise ValueError("images and labels must be given together")
        if (self.test_images is None) != (self.test_labels is None):
            raise ValueError("test_images and test_labels must be given together")
        has_paths = self.images is not None or self.test_images is not None
        if has_paths and self.source != "mnist":
            raise ValueError("image and label paths are only valid for mnist data")
        if self.latent_dim is not None and self.latent_dim > self.input_dim:
            raise ValueError("latent_dim must be <= input_dim")
        return self


class RowLawModel(_Model):
    law: Literal["gaussian", "uniform"] = "gaussian"
    #: Entry variance (gaussian).
    variance: float = Field(1.0, gt=0)
    #: Entry half-width (uniform).
    half_width: float = Field(1.0, gt=0)


def _check_m_list(ms: MList) -> MList:
    if len(ms) < 3 or ms[0] < 1 or any(a >= b for a, b in zip(ms, ms[1:])):
        raise ValueError(f"m must hold at least 3 strictly increasing positive values, got {ms}")
    return ms


class _Sweep(_Command):
    m: MList = Field(default_factory=lambda: [64, 128, 256, 512, 1024, 2048, 4096])
    trials: int = Field(20, ge=3)

    @model_validator(mode="after")
    def _check_sweep(self):
        _check_m_list(self.m)
        return self


# Commands
# --------


class TrainCommand(_Command):
    architecture: ArchitectureModel
    init: InitModel = InitModel()
    train: TrainModel
    data: DataModel = DataModel()


class _PairCommand(_Command):
    checkpoint_a: FilePath
    checkpoint_b: FilePath
    data: DataModel = DataModel(source="gaussian")
    probe_size: int = Field(DEFAULT_PROBE_SIZE, ge=1)


class AlignCommand(_PairCommand):
    method: MatchKind = MatchKind.NAIVE_WM


class BarrierCommand(_PairCommand):
    data: DataModel = DataModel()
    #: Align B to A with this method first; ``None`` interpolates as given.
    align: MatchKind | None = None
    loss: LossKind = LossKind.CROSS_ENTROPY
    grid_size: int = Field(DEFAULT_GRID_SIZE, ge=3)


class DeviationsCommand(_PairCommand):
    align: MatchKind | None = None
    grid_size: int = Field(DEFAULT_GRID_SIZE, ge=3)


class DimCommand(_Command):
    checkpoint: FilePath
    data: DataModel = DataModel(source="gaussian")
    probe_size: int = Field(DEFAULT_PROBE_SIZE, ge=1)


class RatesCommand(_Sweep):
    n: int = Field(ge=1)
    distribution: RowLawModel = RowLawModel()


class LowDimCommand(_Sweep):
    n: int = Field(ge=2)
    k: int = Field(ge=1)
    eta: float = Field(ge=0)
    head: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check_k(self):
        if self.k > self.n:
            raise ValueError("k must be <= n")
        return self


class LowerBoundCommand(_Sweep):
    n: int = Field(ge=1)


class GainCommand(_Sweep):
    n: int = Field(ge=1)
    n_tilde: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_rank(self):
        if self.n_tilde > self.n:
            raise ValueError("n_tilde must be <= n")
        return self


class DropoutCommand(_Command):
    #: Hidden width; must be even.
    N: int = Field(64, ge=2)
    input_dim: int = Field(5, ge=1)
    instances: int = Field(100, ge=1)
    eval_size: int = Field(256, ge=1)
    activation: Activation = Activation.RELU

    @model_validator(mode="after")
    def _check_even(self):
        if self.N % 2:
            raise ValueError("N must be even")
        if self.activation is Activation.SIGMOID:
            raise ValueError("dropout needs a 1-Lipschitz activation (relu or tanh)")
        return self


class MeanFieldCommand(_Command):
    d: int = Field(4, ge=1)
    widths: list[int] = Field(default_factory=lambda: [128, 512, 2048])
    pairs: int = Field(10, ge=1)
    T: float = Field(2.0, gt=0)
    step_size: float = Field(1e-2, gt=0)
    weight_decay: float = Field(0.0, ge=0)
    noise_temperature: float = Field(0.0, ge=0)
    activation: Activation = Activation.TANH
    init_half_width: float = Field(1.0, gt=0)
    shared_init: bool = False
    eval_size: int = Field(512, ge=1)
    grid_size: int = Field(DEFAULT_GRID_SIZE, ge=3)

    @model_validator(mode="after")
    def _check_bounded(self):
        if self.activation is Activation.RELU:
            raise ValueError("mean-field runs need a bounded activation (tanh or sigmoid)")
        return self


class ReproMnistCommand(_Command):
    width: int = Field(512, ge=1)
    depth: int = Field(3, ge=1)
    learning_rates: list[float] = Field(default_factory=lambda: [1e-4, 1e-3, 1e-2, 1e-1])
    epochs: int = Field(DEFAULT_EPOCHS, ge=1)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    data: DataModel = DataModel(source="mnist")
    #: Samples used to evaluate barriers (the head of the data).
    eval_size: int = Field(10000, ge=1)
    probe_size: int = Field(DEFAULT_PROBE_SIZE, ge=1)
    grid_size: int = Field(DEFAULT_GRID_SIZE, ge=3)
    #: Samples generated when falling back to synthetic data.
    synthetic_count: int = Field(8192, ge=1)

    @model_validator(mode="after")
    def _check_rates(self):
        if not self.learning_rates or any(lr <= 0 for lr in self.learning_rates):
            raise ValueError("learning_rates must be a nonempty list of positive values")
        return self


class WidthCommand(_Command):
    input_dim: int = Field(5, ge=1)
    depth: int = Field(1, ge=1)
    widths: list[int] = Field(default_factory=lambda: [64, 256, 1024, 4096])
    seeds: int = Field(10, ge=1)
    activation: Activation = Activation.RELU
    eval_size: int = Field(512, ge=1)
    grid_size: int = Field(DEFAULT_GRID_SIZE, ge=3)


#: Document model for every command.
COMMAND_MODELS: dict[str, type[_Command]] = {
    "train": TrainCommand,
    "align": AlignCommand,
    "barrier": BarrierCommand,
    "deviations": DeviationsCommand,
    "dim": DimCommand,
    "rates": RatesCommand,
    "lowdim": LowDimCommand,
    "lowerbound": LowerBoundCommand,
    "gain": GainCommand,
    "dropout": DropoutCommand,
    "meanfield": MeanFieldCommand,
    "repro-mnist": ReproMnistCommand,
    "width": WidthCommand,
}


def parse(command: str, doc: dict, seed: int | None = None) -> _Command:
    """Validate `doc` for `command`.

    :param seed: if set, replaces the document's seed.
    :raises KeyError: for an unknown command.
    :raises pydantic.ValidationError: for a malformed document.
    """
    model = COMMAND_MODELS[command]
    if seed is not None:
        doc = {**doc, "seed": seed}
    return model.model_validate(doc)


def serialize(parsed: _Command) -> dict:
    """The normalized JSON document for a parsed config."""
    return parsed.model_dump(mode="json")
