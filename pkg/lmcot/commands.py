"""Command handlers behind `cli.py`.

Every handler takes a parsed experiment document and a :class:`RunContext`,
writes its outputs into ``ctx.out_dir``, and returns the list of files it
wrote. :func:`run` validates the document, echoes the normalized document to
``config.json`` in the output directory, and dispatches.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lmcot import experiment_config as ec
from lmcot.checkpoint import load_checkpoint, save_checkpoint
from lmcot.data.mnist import load_mnist_idx
from lmcot.data.synthetic import make_classification, unit_ball_inputs
from lmcot.enums import InitKind, LossKind, MatchKind
from lmcot.errors import ArgumentError, ConfigurationError
from lmcot.experiments import dropout, meanfield, rates, width
from lmcot.interpolation import barrier_curve, layer_deviations, uniform_grid
from lmcot.matching import (
    MatchMethod,
    PermutationStack,
    apply_stack,
    match_layers,
    matching_report,
)
from lmcot.network import (
    Architecture,
    Dataset,
    InitScheme,
    MlpWeights,
    TrainConfig,
    accuracy,
    init_weights,
    train,
)
from lmcot.numerics import CovarianceSpec, child_seed, gaussian_rows, make_rng
from lmcot.utils.csv_io import write_csv
from lmcot.utils.json_serde import write_json
from lmcot.utils.progress import LocalTaskStatus, SilentTaskStatus, TaskStatus

#: Standard MNIST training file names, looked up in the data directory.
MNIST_TRAIN_IMAGES = "train-images-idx3-ubyte"
MNIST_TRAIN_LABELS = "train-labels-idx1-ubyte"
#: Standard MNIST test file names, looked up next to the training files.
MNIST_TEST_IMAGES = "t10k-images-idx3-ubyte"
MNIST_TEST_LABELS = "t10k-labels-idx1-ubyte"

#: Samples generated for synthetic data when the document gives no count.
DEFAULT_SYNTHETIC_COUNT = 2048

MATCHING_COLUMNS = [
    "layer",
    "naive_cost",
    "sigma_cost",
    "activation_cost",
    "dim_naive",
    "dim_weighted",
    "dim_activation",
]


@dataclass
class RunContext:
    out_dir: Path
    seed: int
    threads: int = 1
    #: Where MNIST files are looked up when a document names none.
    data_dir: Path = Path("data/mnist")
    task_status: TaskStatus = field(default_factory=SilentTaskStatus)
    written: list[Path] = field(default_factory=list)

    def path(self, name: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(path)
        return path


# Data helpers
# ------------


def _mnist_train_paths(model: ec.DataModel, data_dir: Path) -> tuple[Path, Path] | None:
    if model.images is not None:
        return model.images, model.labels
    images, labels = data_dir / MNIST_TRAIN_IMAGES, data_dir / MNIST_TRAIN_LABELS
    if images.exists() and labels.exists():
        return images, labels
    logging.warning(f"No MNIST files in {data_dir}; falling back to synthetic data.")
    return None


def _mnist_test_paths(model: ec.DataModel, data_dir: Path) -> tuple[Path, Path] | None:
    if model.test_images is not None:
        return model.test_images, model.test_labels
    base = model.images.parent if model.images is not None else data_dir
    images, labels = base / MNIST_TEST_IMAGES, base / MNIST_TEST_LABELS
    if images.exists() and labels.exists():
        return images, labels
    return None


def _synthetic(model: ec.DataModel, count: int, rng: np.random.Generator) -> Dataset:
    return make_classification(
        count,
        rng,
        input_dim=model.input_dim,
        classes=model.classes,
        latent_dim=model.latent_dim,
        noise=model.noise,
        separation=model.separation,
    )


def load_data(
    model: ec.DataModel,
    rng: np.random.Generator,
    data_dir: Path,
    synthetic_count: int = DEFAULT_SYNTHETIC_COUNT,
) -> Dataset:
    """Load or generate the samples described by `model`.

    :param synthetic_count: samples to generate when the document gives no count.
    """
    count = model.count or synthetic_count
    if model.source == "gaussian":
        inputs = rng.standard_normal((model.input_dim, count))
        return Dataset(inputs=inputs, targets=np.zeros(count, dtype=np.intp))

    if model.source == "mnist":
        paths = _mnist_train_paths(model, data_dir)
        if paths is not None:
            data = load_mnist_idx(*paths).to_dataset()
            return data.head(model.count) if model.count else data

    return _synthetic(model, count, rng)


def load_train_test(
    model: ec.DataModel,
    rng: np.random.Generator,
    data_dir: Path,
    test_count: int,
    synthetic_count: int = DEFAULT_SYNTHETIC_COUNT,
) -> tuple[Dataset, Dataset]:
    """Training samples and up to `test_count` held-out samples.

    MNIST runs hold out the t10k split. Without test files, the last
    `test_count` training samples are held out instead. Synthetic data draws
    the held-out samples from the same class layout as the training samples.
    """
    if model.source == "gaussian":
        raise ConfigurationError("Held-out evaluation needs labelled data (mnist or synth).")

    if model.source == "mnist":
        paths = _mnist_train_paths(model, data_dir)
        if paths is not None:
            train_data = load_mnist_idx(*paths).to_dataset()
            test_paths = _mnist_test_paths(model, data_dir)
            if test_paths is not None:
                test_data = load_mnist_idx(*test_paths).to_dataset().head(test_count)
            else:
                keep = train_data.count - test_count
                if keep < 1:
                    raise ConfigurationError(
                        f"Cannot hold out {test_count} of {train_data.count} samples."
                    )
                logging.warning(
                    f"No MNIST test files found; holding out the last {test_count} "
                    "training samples."
                )
                test_data = train_data.batch(np.arange(keep, train_data.count))
                train_data = train_data.head(keep)
            if model.count:
                train_data = train_data.head(model.count)
            return train_data, test_data

    count = model.count or synthetic_count
    data = _synthetic(model, count + test_count, rng)
    return data.head(count), data.batch(np.arange(count, count + test_count))


def targets_for(data: Dataset, kind: LossKind, output_dim: int) -> Dataset:
    """Convert class labels to one-hot rows when the loss is mse."""
    targets = np.asarray(data.targets)
    if LossKind(kind) is LossKind.MSE and targets.ndim == 1:
        if targets.size and targets.max() >= output_dim:
            raise ArgumentError(f"Label {targets.max()} does not fit {output_dim} outputs.")
        one_hot = np.zeros((output_dim, targets.size))
        one_hot[targets, np.arange(targets.size)] = 1.0
        return Dataset(inputs=data.inputs, targets=one_hot)
    return data


def _check_input_dim(data: Dataset, arch_dims: tuple[int, ...]):
    if data.inputs.shape[0] != arch_dims[0]:
        raise ConfigurationError(
            f"Data has dimension {data.inputs.shape[0]}, network expects {arch_dims[0]}."
        )


def _load_pair(cmd) -> tuple[MlpWeights, MlpWeights, Architecture]:
    A, arch_a, _ = load_checkpoint(cmd.checkpoint_a)
    B, arch_b, _ = load_checkpoint(cmd.checkpoint_b)
    if arch_a != arch_b:
        raise ConfigurationError(f"Checkpoints differ in architecture: {arch_a} vs {arch_b}.")
    return A, B, arch_a


def _probe(cmd, arch: Architecture, ctx: RunContext) -> np.ndarray:
    data = load_data(cmd.data, make_rng(ctx.seed, 0), ctx.data_dir)
    _check_input_dim(data, arch.dims)
    return data.head(cmd.probe_size).inputs


def _aligned(A, B, arch, kind: MatchKind | None, probe) -> tuple[MlpWeights, PermutationStack]:
    if kind is None:
        return B, PermutationStack.identity(arch.dims)
    stack = match_layers(A, B, MatchMethod(kind=kind, probe=probe, activation=arch.activation))
    return apply_stack(B, stack), stack


# Handlers
# --------


def _train(cmd: ec.TrainCommand, ctx: RunContext):
    arch = cmd.architecture.build()
    cfg: TrainConfig = cmd.train.build(ctx.seed)
    data = load_data(cmd.data, make_rng(ctx.seed, 0), ctx.data_dir)
    _check_input_dim(data, arch.dims)
    data = targets_for(data, cfg.loss, arch.dims[-1])

    weights = init_weights(arch, cmd.init.build(), make_rng(ctx.seed, 1))
    trained, log = train(
        weights, data, cfg, activation=arch.activation, task_status=ctx.task_status
    )

    metadata = {"seed": ctx.seed, "steps": cfg.steps, "final_loss": log[-1] if log else None}
    save_checkpoint(trained, arch, metadata, ctx.path("checkpoint.lmck"))
    write_csv(ctx.path("losses.csv"), ["step", "loss"], enumerate(log))


def _align(cmd: ec.AlignCommand, ctx: RunContext):
    A, B, arch = _load_pair(cmd)
    probe = _probe(cmd, arch, ctx)
    B_aligned, stack = _aligned(A, B, arch, cmd.method, probe)
    records = matching_report(A, B, stack, probe, arch.activation)

    write_csv(
        ctx.path("matching.csv"),
        MATCHING_COLUMNS,
        [[getattr(r, name) for name in MATCHING_COLUMNS] for r in records],
    )
    write_json(
        {
            "method": cmd.method,
            "total_cost": math.fsum(r.cost_for(cmd.method) for r in records),
            "permutations": stack.perms,
        },
        ctx.path("alignment.json"),
    )
    metadata = {"aligned_to": str(cmd.checkpoint_a), "method": cmd.method}
    save_checkpoint(B_aligned, arch, metadata, ctx.path("aligned_b.lmck"))


def _barrier(cmd: ec.BarrierCommand, ctx: RunContext):
    A, B, arch = _load_pair(cmd)
    data = load_data(cmd.data, make_rng(ctx.seed, 0), ctx.data_dir)
    _check_input_dim(data, arch.dims)
    B_aligned, _ = _aligned(A, B, arch, cmd.align, data.head(cmd.probe_size).inputs)
    data = targets_for(data, cmd.loss, arch.dims[-1])
    curve = barrier_curve(A, B_aligned, data, cmd.loss, cmd.grid_size, arch.activation)

    write_csv(ctx.path("curve.csv"), ["t", "loss"], zip(curve.t_grid, curve.losses))
    write_csv(
        ctx.path("barrier.csv"),
        ["loss_a", "loss_b", "barrier_raw", "barrier_clamped", "barrier_vs_max"],
        [(curve.loss_a, curve.loss_b, curve.barrier, curve.barrier_clamped, curve.barrier_vs_max)],
    )


def _deviations(cmd: ec.DeviationsCommand, ctx: RunContext):
    A, B, arch = _load_pair(cmd)
    data = load_data(cmd.data, make_rng(ctx.seed, 0), ctx.data_dir)
    _check_input_dim(data, arch.dims)
    probe = data.head(cmd.probe_size)
    B_aligned, _ = _aligned(A, B, arch, cmd.align, probe.inputs)
    report = layer_deviations(A, B_aligned, probe, uniform_grid(cmd.grid_size), arch.activation)

    rows = []
    for layer in range(len(report.energy_a)):
        for j, t in enumerate(report.t_grid):
            rows.append(
                (
                    layer + 1,
                    t,
                    report.deviation_a[layer][j],
                    report.deviation_b[layer][j],
                    report.energy_a[layer],
                    report.energy_b[layer],
                )
            )
    write_csv(
        ctx.path("deviations.csv"),
        ["layer", "t", "deviation_a", "deviation_b", "energy_a", "energy_b"],
        rows,
    )


def _dim(cmd: ec.DimCommand, ctx: RunContext):
    weights, arch, _ = load_checkpoint(cmd.checkpoint)
    probe = _probe(cmd, arch, ctx)
    records = matching_report(
        weights, weights, PermutationStack.identity(arch.dims), probe, arch.activation
    )
    write_csv(
        ctx.path("dim.csv"),
        ["layer", "width", "dim_weights", "dim_weighted", "dim_activation"],
        [
            (r.layer, arch.dims[r.layer], r.dim_naive, r.dim_weighted, r.dim_activation)
            for r in records
        ],
    )


def _write_fit(ctx: RunContext, fit: rates.RateFit, name: str = "rates", **extra):
    write_csv(
        ctx.path(f"{name}.csv"),
        ["m", "mean_cost", "std_err"],
        [(p.m, p.mean_cost, p.std_err) for p in fit.points],
    )
    write_json(
        {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared, **extra},
        ctx.path(f"{name}_fit.json"),
    )


def _rates(cmd: ec.RatesCommand, ctx: RunContext):
    dist = cmd.distribution
    if dist.law == "uniform":
        law = rates.UniformLaw(n=cmd.n, half_width=dist.half_width)
    else:
        law = CovarianceSpec.isotropic(cmd.n, dist.variance)
    fit = rates.empirical_rate(law, cmd.m, cmd.trials, ctx.seed, ctx.threads, ctx.task_status)
    _write_fit(ctx, fit, expected_slope=-2.0 / cmd.n)


def _lowdim(cmd: ec.LowDimCommand, ctx: RunContext):
    report = rates.lowdim_rate(
        cmd.n, cmd.k, cmd.eta, cmd.m, cmd.trials, ctx.seed, cmd.head, ctx.threads, ctx.task_status
    )
    _write_fit(
        ctx,
        report.fit,
        eta=report.eta,
        regime_limit=report.regime_limit,
        expected_slope=-2.0 / cmd.k,
    )


def _lowerbound(cmd: ec.LowerBoundCommand, ctx: RunContext):
    fit = rates.lower_bound_rate(cmd.n, cmd.m, cmd.trials, ctx.seed, ctx.threads, ctx.task_status)
    _write_fit(ctx, fit, floor_slope=-2.0 / cmd.n)


def _gain(cmd: ec.GainCommand, ctx: RunContext):
    report = rates.gain_rates(
        cmd.n, cmd.n_tilde, cmd.m, cmd.trials, ctx.seed, ctx.threads, ctx.task_status
    )
    rows = []
    for method, fit in (("naive", report.naive), ("weighted", report.weighted)):
        rows.extend((method, p.m, p.mean_cost, p.std_err) for p in fit.points)
    write_csv(ctx.path("gain.csv"), ["method", "m", "mean_cost", "std_err"], rows)
    write_csv(
        ctx.path("gain_instances.csv"),
        ["m", "trial", "naive_sigma_cost", "weighted_sigma_cost"],
        report.per_instance,
    )
    write_json(
        {
            "naive_slope": report.naive.slope,
            "weighted_slope": report.weighted.slope,
            "dominance_violations": report.dominance_violations,
            "instances": report.instances,
        },
        ctx.path("gain_fit.json"),
    )


def _dropout(cmd: ec.DropoutCommand, ctx: RunContext):
    law = CovarianceSpec.isotropic(cmd.input_dim, 1.0 / cmd.input_dim)
    rows = []
    for i in range(cmd.instances):
        rng = make_rng(ctx.seed, i)
        net = dropout.uniform_two_layer(gaussian_rows(cmd.N, law, rng))
        X = unit_ball_inputs(cmd.input_dim, cmd.eval_size, rng)
        gap = dropout.dropout_gap(net, X, cmd.activation)
        rows.append((i, gap.drop_error, gap.w1_bound, gap.holds))
        ctx.task_status.progress(i + 1, cmd.instances)
    write_csv(ctx.path("dropout.csv"), ["instance", "drop_error", "w1_bound", "holds"], rows)
    write_json(
        {"instances": cmd.instances, "violations": sum(1 for row in rows if not row[3])},
        ctx.path("dropout_summary.json"),
    )


def _meanfield(cmd: ec.MeanFieldCommand, ctx: RunContext):
    cfg = meanfield.MeanFieldConfig(
        d=cmd.d,
        T=cmd.T,
        step_size=cmd.step_size,
        weight_decay=cmd.weight_decay,
        noise_temperature=cmd.noise_temperature,
        activation=cmd.activation,
        init_half_width=cmd.init_half_width,
        shared_init=cmd.shared_init,
        eval_size=cmd.eval_size,
        grid_size=cmd.grid_size,
    )
    reports = meanfield.meanfield_sweep(
        cfg, cmd.widths, cmd.pairs, ctx.seed, ctx.threads, ctx.task_status
    )
    columns = [
        "N",
        "pair",
        "deviation_matched",
        "deviation_unmatched",
        "barrier_matched",
        "barrier_unmatched",
        "w2sq_matched",
        "w2sq_identity",
    ]
    rows = [
        (
            r.N,
            i % cmd.pairs,
            r.deviation_matched,
            r.deviation_unmatched,
            r.barrier_matched,
            r.barrier_unmatched,
            r.w2sq_matched,
            r.w2sq_identity,
        )
        for i, r in enumerate(reports)
    ]
    write_csv(ctx.path("meanfield.csv"), columns, rows)

    summary = []
    for N in cmd.widths:
        group = [r for r in reports if r.N == N]
        summary.append(
            {
                "N": N,
                "median_deviation_matched": float(np.median([r.deviation_matched for r in group])),
                "median_deviation_unmatched": float(
                    np.median([r.deviation_unmatched for r in group])
                ),
                "matched_barrier_wins": sum(
                    1 for r in group if r.barrier_matched <= r.barrier_unmatched
                ),
                "pairs": len(group),
            }
        )
    write_json({"config": cfg, "widths": summary, "reports": reports}, ctx.path("meanfield.json"))


def _width(cmd: ec.WidthCommand, ctx: RunContext):
    cfg = width.WidthSweepConfig(
        input_dim=cmd.input_dim,
        depth=cmd.depth,
        activation=cmd.activation,
        eval_size=cmd.eval_size,
        grid_size=cmd.grid_size,
    )
    points, instances = width.width_sweep(
        cfg, cmd.widths, cmd.seeds, ctx.seed, ctx.threads, ctx.task_status
    )
    metrics = ["barrier_matched", "barrier_unmatched", "deviation_matched", "deviation_unmatched"]
    write_csv(
        ctx.path("width.csv"),
        ["width"] + metrics,
        [[p.width] + [getattr(p, k) for k in metrics] for p in points],
    )
    write_csv(
        ctx.path("width_instances.csv"),
        ["width", "seed_index"] + metrics,
        [[i.width, i.seed_index] + [getattr(i, k) for k in metrics] for i in instances],
    )


def _repro_mnist(cmd: ec.ReproMnistCommand, ctx: RunContext):
    data, held_out = load_train_test(
        cmd.data,
        make_rng(ctx.seed, 0),
        ctx.data_dir,
        max(cmd.eval_size, cmd.probe_size),
        cmd.synthetic_count,
    )
    hidden = (cmd.width,) * cmd.depth
    arch = Architecture(dims=(data.inputs.shape[0],) + hidden + (cmd.data.classes,))
    eval_data = held_out.head(cmd.eval_size)
    probe = held_out.head(cmd.probe_size).inputs
    steps = cmd.epochs * math.ceil(data.count / cmd.batch_size)
    logging.info(f"repro-mnist: {arch.dims}, {data.count} samples, {steps} steps per run.")

    violations = []
    for lr in cmd.learning_rates:
        runs = []
        for index in (0, 1):
            run_seed = child_seed(ctx.seed, index)
            cfg = TrainConfig(steps=steps, batch_size=cmd.batch_size, step_size=lr, seed=run_seed)
            scheme = InitScheme(kind=InitKind.GAUSSIAN_IID)
            weights = init_weights(arch, scheme, make_rng(run_seed, 0))
            trained, _ = train(
                weights, data, cfg, activation=arch.activation, task_status=ctx.task_status
            )
            runs.append(trained)
        A, B = runs

        table, curves, barriers = [], [], {}
        for kind in MatchKind:
            stack = match_layers(A, B, MatchMethod(kind=kind, probe=probe))
            curve = barrier_curve(
                A, apply_stack(B, stack), eval_data, LossKind.CROSS_ENTROPY, cmd.grid_size
            )
            barriers[kind.value] = curve
            for record in matching_report(A, B, stack, probe):
                table.append(
                    (
                        kind,
                        record.layer,
                        record.cost_for(kind),
                        record.dim_for(kind),
                        curve.barrier,
                        curve.barrier_clamped,
                    )
                )
            curves.extend((kind, t, loss) for t, loss in zip(curve.t_grid, curve.losses))

        ordering_holds = barriers["cov_wm"].barrier <= barriers["naive_wm"].barrier
        if not ordering_holds:
            violations.append(lr)
            logging.warning(f"lr={lr}: cov_wm barrier exceeds naive_wm barrier.")

        tag = f"lr_{lr:g}"
        write_csv(
            ctx.path(f"{tag}/table.csv"),
            ["method", "layer", "cost", "dim", "barrier_raw", "barrier_clamped"],
            table,
        )
        write_csv(ctx.path(f"{tag}/curves.csv"), ["method", "t", "loss"], curves)
        write_json(
            {
                "learning_rate": lr,
                "steps": steps,
                "dims": arch.dims,
                "accuracy_a": accuracy(A, eval_data, arch.activation),
                "accuracy_b": accuracy(B, eval_data, arch.activation),
                "cov_wm_not_worse": ordering_holds,
                "barriers": {
                    k: {"raw": c.barrier, "clamped": c.barrier_clamped, "vs_max": c.barrier_vs_max}
                    for k, c in barriers.items()
                },
            },
            ctx.path(f"{tag}/summary.json"),
        )

    write_json(
        {
            "learning_rates": cmd.learning_rates,
            "train_samples": data.count,
            "eval_samples": eval_data.count,
            "cov_wm_ordering_violations": violations,
        },
        ctx.path("repro_summary.json"),
    )


#: Handler for every command name accepted by :func:`run`.
HANDLERS: dict[str, Callable] = {
    "train": _train,
    "align": _align,
    "barrier": _barrier,
    "deviations": _deviations,
    "dim": _dim,
    "rates": _rates,
    "lowdim": _lowdim,
    "lowerbound": _lowerbound,
    "gain": _gain,
    "dropout": _dropout,
    "meanfield": _meanfield,
    "repro-mnist": _repro_mnist,
    "width": _width,
}


def run(
    command: str,
    doc: dict,
    out_dir: Path,
    seed: int | None = None,
    threads: int = 1,
    data_dir: Path = Path("data/mnist"),
    verbose: bool = False,
) -> list[Path]:
    """Validate `doc`, run `command`, and return the files written.

    :raises ArgumentError: for an unknown command.
    :raises pydantic.ValidationError: for a malformed document.
    """
    if command not in HANDLERS:
        raise ArgumentError(f"Unknown command: {command}")
    parsed = ec.parse(command, doc, seed)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(
        out_dir=out_dir,
        seed=parsed.seed,
        threads=threads,
        data_dir=Path(data_dir),
        task_status=LocalTaskStatus(command) if verbose else SilentTaskStatus(),
    )
    write_json(ec.serialize(parsed), ctx.path("config.json"))

    logging.info(f"Running {command} (seed {parsed.seed}, {threads} threads) into {out_dir}.")
    try:
        HANDLERS[command](parsed, ctx)
    except Exception as e:
        ctx.task_status.failure(str(e))
        raise
    ctx.task_status.success(f"wrote {len(ctx.written)} files")
    return ctx.written
