#!/usr/bin/env python3
"""Command-line entry point.

Every command reads one JSON experiment document (``--config``) and writes its
results into ``--out``::

    ./cli.py rates --config configs/rates_n2.json --out results/rates_n2
"""

import functools
import json
import os
from pathlib import Path

import click
from pydantic import ValidationError

import config
import lmcot
from lmcot import commands
from lmcot.errors import LmcError


def _load_doc(path: Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise click.UsageError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise click.UsageError(f"{path} must hold a JSON object.")
    return doc


def _run(ctx: click.Context, command: str, config_path, seed, out, threads):
    app_config = ctx.obj
    threads = threads or app_config.THREADS
    doc = _load_doc(config_path)
    try:
        written = commands.run(
            command,
            doc,
            Path(out),
            seed=seed,
            threads=threads,
            data_dir=Path(app_config.DATA_DIR),
            verbose=app_config.LMC_ENVIRONMENT != config.TESTING,
        )
    except ValidationError as e:
        raise click.UsageError(f"Invalid {command} config:\n{e}") from e
    except LmcError as e:
        raise click.ClickException(str(e)) from e
    click.echo(f"Wrote {len(written)} files to {out}.")


def run_options(fn):
    """Options shared by every experiment command."""

    @click.option(
        "--config",
        "config_path",
        required=True,
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="JSON experiment document",
    )
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="overrides the document's seed")
    @click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path))
    @click.option(
        "--threads",
        type=click.IntRange(min=1),
        help="worker processes (default: LMC_THREADS, else 1)",
    )
    @click.pass_context
    @functools.wraps(fn)
    def wrapper(ctx, config_path, seed, out, threads):
        return _run(ctx, fn.__name__.replace("_", "-"), config_path, seed, out, threads)

    return wrapper


@click.group()
@click.pass_context
def cli(ctx):
    ctx.obj = lmcot.setup(os.environ.get("LMC_ENVIRONMENT", config.DEVELOPMENT))


@cli.command()
@run_options
def train():
    """Train one network and write a checkpoint."""


@cli.command()
@run_options
def align():
    """Align checkpoint B to checkpoint A and report per-layer costs."""


@cli.command()
@run_options
def barrier():
    """Loss along the linear path between two checkpoints."""


@cli.command()
@run_options
def deviations():
    """Per-layer activation deviations along the path."""


@cli.command()
@run_options
def dim():
    """Approximate dimensions of weights and activations, per layer."""


@cli.command()
@run_options
def rates():
    """Two-sample Wasserstein rate of an empirical measure."""


@cli.command()
@run_options
def lowdim():
    """Wasserstein rate for an approximately low-dimensional Gaussian."""


@cli.command()
@run_options
def lowerbound():
    """Optimal matching cost of random weight matrices vs width."""


@cli.command()
@run_options
def gain():
    """Naive vs covariance-weighted matching under a rank-deficient Sigma."""


@cli.command()
@run_options
def dropout():
    """Dropout error of two-layer networks vs its W_1 bound."""


@cli.command()
@run_options
def meanfield():
    """Train mean-field network pairs and measure their matched path."""


@cli.command()
@run_options
def width():
    """Barriers of random network pairs as the width grows."""


@cli.command("repro-mnist")
@run_options
def repro_mnist():
    """Train MLP pairs, align them with every method, and tabulate barriers."""


if __name__ == "__main__":
    cli()
