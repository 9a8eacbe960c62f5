"""Synthetic datasets for offline runs and the mean-field experiment."""

import numpy as np

from lmcot.errors import ConfigurationError
from lmcot.network import Dataset


def make_classification(
    count: int,
    rng: np.random.Generator,
    input_dim: int = 784,
    classes: int = 10,
    latent_dim: int | None = None,
    noise: float = 0.1,
    separation: float = 2.5,
) -> Dataset:
    """MNIST-shaped stand-in: class-conditional Gaussians on a random subspace.

    Each sample is U (separation * mu_c + 0.5 z) + noise * g with a shared
    orthonormal basis U (input_dim x latent_dim), class means mu_c ~ N(0, I), and
    z, g standard normal. The class structure lives in `latent_dim`
    dimensions (default min(16, input_dim)), so activations are approximately
    low-dimensional. With the defaults, samples have norm near 10, like MNIST
    digits scaled to [0, 1].
    """
    if latent_dim is None:
        latent_dim = min(16, input_dim)
    if count < 1 or classes < 2 or not 1 <= latent_dim <= input_dim:
        raise ConfigurationError(
            f"Bad synthetic shape: count={count}, classes={classes}, "
            f"latent_dim={latent_dim}, input_dim={input_dim}."
        )
    if noise < 0 or not separation > 0:
        raise ConfigurationError(
            f"Need noise >= 0 and separation > 0, got {noise}, {separation}."
        )
    basis, _ = np.linalg.qr(rng.standard_normal((input_dim, latent_dim)))
    means = rng.standard_normal((latent_dim, classes))
    labels = rng.integers(0, classes, size=count)
    latent = separation * means[:, labels] + 0.5 * rng.standard_normal((latent_dim, count))
    inputs = basis @ latent
    inputs += noise * rng.standard_normal((input_dim, count))
    return Dataset(inputs=inputs, targets=labels.astype(np.intp))


def target_direction(d: int) -> np.ndarray:
    """The fixed unit vector ones(d) / sqrt(d)."""
    return np.full(d, 1.0 / np.sqrt(d))


def make_target_regression(
    d: int, count: int, rng: np.random.Generator, w_star: np.ndarray | None = None
) -> Dataset:
    """x uniform on [-1, 1]^d and y = tanh(<w_star, x>); targets are 1 x count."""
    if d < 1 or count < 0:
        raise ConfigurationError(f"Bad regression shape: d={d}, count={count}.")
    w_star = target_direction(d) if w_star is None else np.asarray(w_star, dtype=np.float64)
    X = rng.uniform(-1.0, 1.0, size=(d, count))
    return Dataset(inputs=X, targets=np.tanh(w_star @ X)[None, :])


def make_norm_regression(d: int, count: int, rng: np.random.Generator) -> Dataset:
    """x uniform on [-1, 1]^d and y = |x|; targets are 1 x count."""
    if d < 1 or count < 0:
        raise ConfigurationError(f"Bad regression shape: d={d}, count={count}.")
    X = rng.uniform(-1.0, 1.0, size=(d, count))
    return Dataset(inputs=X, targets=np.linalg.norm(X, axis=0)[None, :])


def unit_ball_inputs(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` points drawn uniformly from the closed unit ball of R^n, as columns."""
    directions = rng.standard_normal((n, count))
    directions /= np.maximum(np.linalg.norm(directions, axis=0), np.finfo(float).tiny)
    radii = rng.uniform(0.0, 1.0, size=count) ** (1.0 / n)
    return directions * radii
