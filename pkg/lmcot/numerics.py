"""Dense matrix kernels, seeded samplers, and second-moment diagnostics.

Matrices are plain float64 :class:`numpy.ndarray` objects. Random state is a
:class:`numpy.random.Generator`; every sampler takes one explicitly so that all
output is a pure function of (arguments, generator state).

Child streams are derived with :func:`make_rng`, which mixes a master seed
with an integer key through :class:`numpy.random.SeedSequence`. Two different
keys give independent streams, and the same (seed, key) always gives the same
stream regardless of which worker process asks for it.
"""

from dataclasses import dataclass

import numpy as np

from lmcot.consts import PSD_TOL, SYMMETRY_TOL
from lmcot.errors import (
    ArgumentError,
    ConfigurationError,
    DegenerateInputError,
    NotPsdError,
)

# Seeds and keys
# --------------


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Create a generator for the stream identified by `seed` and `key`.

    :param seed: the master seed (a non-negative 64-bit integer).
    :param key: an optional path of child indices, e.g. ``(m_index, trial)``.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def child_seed(seed: int, index: int) -> int:
    """Derive a 64-bit child seed from a master seed.

    The mixing function is SeedSequence's hash of ``(seed, spawn_key=(index,))``;
    distinct indices give distinct seeds.
    """
    state = np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)
    return int(state[0])


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce `x` to a finite 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-D, got shape {arr.shape}.")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} has non-finite entries.")
    return arr


# Covariance models
# -----------------


@dataclass(frozen=True)
class CovarianceSpec:
    """A block-diagonal covariance Diag(lambda_1 I_p1, lambda_2 I_p2, ...)."""

    #: Size p_i of each block.
    group_sizes: tuple[int, ...]
    #: Eigenvalue lambda_i of each block, sorted non-increasing.
    eigenvalues: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "group_sizes", tuple(int(p) for p in self.group_sizes))
        object.__setattr__(self, "eigenvalues", tuple(float(v) for v in self.eigenvalues))

    @classmethod
    def isotropic(cls, n: int, variance: float = 1.0) -> "CovarianceSpec":
        return cls(group_sizes=(n,), eigenvalues=(variance,))

    @classmethod
    def low_dimensional(
        cls, n: int, k: int, head: float = 1.0, tail: float = 0.0
    ) -> "CovarianceSpec":
        """Variance `head` on the first `k` coordinates and `tail` on the rest."""
        if k == n:
            return cls.isotropic(n, head)
        return cls(group_sizes=(k, n - k), eigenvalues=(head, tail))

    @property
    def dim(self) -> int:
        return sum(self.group_sizes)

    def validate(self):
        if len(self.group_sizes) != len(self.eigenvalues):
            raise ConfigurationError(
                f"Got {len(self.group_sizes)} group sizes but "
                f"{len(self.eigenvalues)} eigenvalues."
            )
        if not self.group_sizes or any(p < 1 for p in self.group_sizes):
            raise ConfigurationError("Every group must have at least one coordinate.")
        if any(not np.isfinite(v) or v < 0 for v in self.eigenvalues):
            raise ConfigurationError(f"Eigenvalues must be finite and >= 0: {self.eigenvalues}")
        if any(a < b for a, b in zip(self.eigenvalues, self.eigenvalues[1:])):
            raise ConfigurationError(f"Eigenvalues must be non-increasing: {self.eigenvalues}")

    def diagonal(self) -> np.ndarray:
        """The covariance diagonal, one entry per coordinate."""
        return np.repeat(np.array(self.eigenvalues, dtype=np.float64), self.group_sizes)

    def eta(self, k: int) -> float:
        """Tail-to-head ratio of the approximately low-dimensional model.

        eta = sqrt(sum of the trailing n - k variances) / (4 sqrt(sum of the
        leading k variances)). Small eta means the law is close to
        k-dimensional.
        """
        diag = self.diagonal()
        if not 1 <= k <= diag.size:
            raise ConfigurationError(f"k must lie in [1, {diag.size}], got {k}.")
        head = diag[:k].sum()
        if head <= 0:
            raise DegenerateInputError("The leading k variances are all zero.")
        return float(np.sqrt(diag[k:].sum()) / (4.0 * np.sqrt(head)))


# Samplers
# --------


def gaussian_rows(m: int, spec: CovarianceSpec, rng: np.random.Generator) -> np.ndarray:
    """Sample an m x n matrix whose rows are i.i.d. N(0, spec)."""
    spec.validate()
    if m < 1:
        raise ConfigurationError(f"Need at least one row, got m = {m}.")
    scale = np.sqrt(spec.diagonal())
    return rng.standard_normal((m, spec.dim)) * scale


def uniform_rows(m: int, n: int, half_width: float, rng: np.random.Generator) -> np.ndarray:
    """Sample an m x n matrix with entries i.i.d. uniform on [-h, h]."""
    if not half_width > 0:
        raise ConfigurationError(f"half_width must be positive, got {half_width}.")
    if m < 1 or n < 1:
        raise ConfigurationError(f"Shape must be positive, got ({m}, {n}).")
    return rng.uniform(-half_width, half_width, size=(m, n))


# Second moments and spectra
# --------------------------


def second_moment(Z) -> np.ndarray:
    """Return (1/s) Z Z^T for an m x s matrix of s column samples.

    The estimate is uncentered.
    """
    Z = as_matrix(Z, "Z")
    s = Z.shape[1]
    if s == 0:
        raise ArgumentError("second_moment needs at least one column.")
    S = (Z @ Z.T) / s
    return 0.5 * (S + S.T)


def _check_symmetric(S, name: str = "S") -> np.ndarray:
    S = as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise ArgumentError(f"{name} must be square, got shape {S.shape}.")
    scale = 1.0 + (np.max(np.abs(S)) if S.size else 0.0)
    if S.size and np.max(np.abs(S - S.T)) > SYMMETRY_TOL * scale:
        raise ArgumentError(f"{name} is not symmetric.")
    return S


def approx_dim(S) -> float:
    """Approximate dimension tr(S)^2 / tr(S^2) of a symmetric PSD matrix."""
    S = _check_symmetric(S)
    tr_sq = float(np.sum(S * S.T))
    if tr_sq <= 0:
        raise DegenerateInputError("approx_dim is undefined for the zero matrix.")
    tr = float(np.trace(S))
    return tr * tr / tr_sq


def sym_eig(S) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition S = O diag(lam) O^T with lam sorted non-increasing."""
    S = _check_symmetric(S)
    lam, O = np.linalg.eigh(0.5 * (S + S.T))
    order = np.argsort(lam)[::-1]
    return O[:, order], lam[order]


def psd_sqrt(S) -> np.ndarray:
    """Symmetric square root of a PSD matrix.

    Eigenvalues in [-PSD_TOL, 0) are rounding noise and are clamped to zero.
    """
    O, lam = sym_eig(S)
    if lam.size and lam[-1] < -PSD_TOL * (1.0 + abs(lam[0])):
        raise NotPsdError(f"Matrix has eigenvalue {lam[-1]:.3g} < 0.")
    root = np.sqrt(np.clip(lam, 0.0, None))
    R = (O * root) @ O.T
    return 0.5 * (R + R.T)
