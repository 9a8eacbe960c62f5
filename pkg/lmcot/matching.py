"""Layer-wise neuron alignment between two networks with the same architecture.

Permuting the neurons of hidden layer l (rows of W^l and b^l) and the matching
columns of W^{l+1} leaves the network function unchanged. Given networks A
and B, we look for the stack of permutations that brings B's weights closest
to A's, one hidden layer at a time:

- ``naive_wm`` compares weight rows with the Euclidean norm.
- ``cov_wm`` compares weight rows with the semi-norm induced by Sigma, the
  second moment of A's inputs to that layer. Since
  |w Sigma^{1/2}|^2 = w Sigma w^T, this is naive matching after right-multiplying
  every row by psd_sqrt(Sigma).
- ``activation_m`` compares the neurons' activation vectors on a probe batch.

Layers are matched in order 1..L. Before matching layer l, B's columns are
permuted by the permutation already chosen for layer l - 1. The output layer
is never permuted.
"""

from dataclasses import dataclass

import numpy as np

from lmcot.assignment import (
    assignment_cost,
    invert_permutation,
    is_permutation,
    pairwise_sq_dist,
    solve_lap,
)
from lmcot.enums import Activation, MatchKind
from lmcot.errors import ArgumentError, ConfigurationError
from lmcot.network import MlpWeights, forward
from lmcot.numerics import approx_dim, as_matrix, psd_sqrt, second_moment


@dataclass
class PermutationStack:
    """One permutation per hidden layer; ``perms[l - 1]`` acts on layer l."""

    perms: list[np.ndarray]

    @classmethod
    def identity(cls, dims: tuple[int, ...]) -> "PermutationStack":
        return cls(perms=[np.arange(m, dtype=np.intp) for m in dims[1:-1]])

    @property
    def depth(self) -> int:
        return len(self.perms)

    def inverse(self) -> "PermutationStack":
        return PermutationStack(perms=[invert_permutation(p) for p in self.perms])

    def compose(self, other: "PermutationStack") -> "PermutationStack":
        """The stack equal to applying `self` and then `other`."""
        return PermutationStack(perms=[p[q] for p, q in zip(self.perms, other.perms)])

    def check(self, dims: tuple[int, ...]):
        hidden = dims[1:-1]
        if len(self.perms) != len(hidden):
            raise ArgumentError(f"Stack has {len(self.perms)} layers, network has {len(hidden)}.")
        for i, (p, m) in enumerate(zip(self.perms, hidden)):
            if not is_permutation(p, m):
                raise ArgumentError(f"Layer {i + 1}: not a permutation of size {m}.")


def random_stack(dims: tuple[int, ...], rng: np.random.Generator) -> PermutationStack:
    return PermutationStack(perms=[rng.permutation(m) for m in dims[1:-1]])


@dataclass(frozen=True)
class MatchMethod:
    kind: MatchKind = MatchKind.NAIVE_WM
    #: Probe inputs (m_0 x samples); required for cov_wm and activation_m.
    probe: np.ndarray | None = None
    activation: Activation = Activation.RELU

    def validate(self):
        kind = MatchKind(self.kind)
        if kind.needs_probe and (self.probe is None or np.asarray(self.probe).shape[-1] == 0):
            raise ConfigurationError(f"{kind.value} needs a nonempty probe batch.")


@dataclass
class LayerMatchRecord:
    #: Hidden layer index (1-based).
    layer: int
    #: |W_A - P W_B Q^T|^2 (bias column included when present).
    naive_cost: float
    #: The same difference measured in the Sigma_A^{l-1} semi-norm.
    sigma_cost: float
    #: |Z_A - P Z_B|^2 on the probe.
    activation_cost: float
    #: Dim(W_A W_A^T)
    dim_naive: float
    #: Dim(W_A Sigma_A^{l-1} W_A^T)
    dim_weighted: float
    #: Dim(Sigma_A^l)
    dim_activation: float

    def cost_for(self, kind: MatchKind) -> float:
        return {
            MatchKind.NAIVE_WM: self.naive_cost,
            MatchKind.COV_WM: self.sigma_cost,
            MatchKind.ACTIVATION_M: self.activation_cost,
        }[MatchKind(kind)]

    def dim_for(self, kind: MatchKind) -> float:
        return {
            MatchKind.NAIVE_WM: self.dim_naive,
            MatchKind.COV_WM: self.dim_weighted,
            MatchKind.ACTIVATION_M: self.dim_activation,
        }[MatchKind(kind)]


def apply_stack(weights: MlpWeights, stack: PermutationStack) -> MlpWeights:
    """Return the network with W^l replaced by P_l W^l P_{l-1}^T.

    P_0 and P_{L+1} are identities. Row i of the permuted layer is row
    ``perm[i]`` of the original, so the network function is unchanged.
    """
    stack.check(weights.dims)
    perms = [None] + list(stack.perms) + [None]
    matrices, biases = [], [] if weights.has_bias else None
    for i, W in enumerate(weights.matrices):
        rows, cols = perms[i + 1], perms[i]
        if rows is not None:
            W = W[rows]
        if cols is not None:
            W = W[:, cols]
        matrices.append(np.array(W))
        if biases is not None:
            b = weights.biases[i]
            biases.append(np.array(b[rows] if rows is not None else b))
    return MlpWeights(matrices=matrices, biases=biases)


def _rows(weights: MlpWeights, i: int, col_perm: np.ndarray | None) -> np.ndarray:
    """Rows of layer i (0-based), columns permuted, bias appended as a column."""
    W = weights.matrices[i]
    if col_perm is not None:
        W = W[:, col_perm]
    if weights.has_bias:
        W = np.hstack([W, weights.biases[i][:, None]])
    return W


def _with_bias_block(R: np.ndarray, has_bias: bool) -> np.ndarray:
    """Pad R with a unit diagonal entry for the appended bias column."""
    if not has_bias:
        return R
    n = R.shape[0]
    padded = np.zeros((n + 1, n + 1))
    padded[:n, :n] = R
    padded[n, n] = 1.0
    return padded


def _input_second_moments(A: MlpWeights, probe: np.ndarray, activation: Activation):
    """Sigma_A^0, ..., Sigma_A^L: second moments of the inputs to each layer, and
    A's hidden activations on the probe."""
    trace = forward(A, probe, activation)
    sigmas = [second_moment(probe)] + [second_moment(phi) for phi in trace.hidden]
    return sigmas, trace.hidden


def match_layers(A: MlpWeights, B: MlpWeights, method: MatchMethod) -> PermutationStack:
    """Find P_1, ..., P_L aligning B to A with the chosen method.

    The result satisfies ``apply_stack(B, stack) ~ A`` when B is a permuted
    copy of A.
    """
    method.validate()
    kind = MatchKind(method.kind)
    if A.dims != B.dims or A.has_bias != B.has_bias:
        raise ArgumentError(f"Architectures differ: {A.dims} vs {B.dims}.")

    sigmas = hidden_a = hidden_b = None
    if kind is MatchKind.COV_WM:
        probe = as_matrix(method.probe, "probe")
        sigmas, _ = _input_second_moments(A, probe, method.activation)
    elif kind is MatchKind.ACTIVATION_M:
        probe = as_matrix(method.probe, "probe")
        hidden_a = forward(A, probe, method.activation).hidden
        hidden_b = forward(B, probe, method.activation).hidden

    perms = []
    prev = None
    for i in range(A.num_layers - 1):
        if kind is MatchKind.ACTIVATION_M:
            C = pairwise_sq_dist(hidden_a[i], hidden_b[i])
        else:
            rows_a = _rows(A, i, None)
            rows_b = _rows(B, i, prev)
            if kind is MatchKind.COV_WM:
                R = _with_bias_block(psd_sqrt(sigmas[i]), A.has_bias)
                rows_a, rows_b = rows_a @ R, rows_b @ R
            C = pairwise_sq_dist(rows_a, rows_b)
        perm, _ = solve_lap(C)
        perms.append(perm)
        prev = perm
    return PermutationStack(perms=perms)


def matching_report(
    A: MlpWeights,
    B: MlpWeights,
    stack: PermutationStack,
    probe,
    activation: Activation = Activation.RELU,
) -> list[LayerMatchRecord]:
    """Per-layer costs of all three methods under `stack`, plus Dim values.

    Evaluating every method under the same stack makes the costs comparable.
    """
    stack.check(B.dims)
    probe = as_matrix(probe, "probe")
    sigmas, hidden_a = _input_second_moments(A, probe, activation)
    hidden_b = forward(B, probe, activation).hidden

    records = []
    prev = None
    for i, perm in enumerate(stack.perms):
        rows_a = _rows(A, i, None)
        rows_b = _rows(B, i, prev)[perm]
        diff = rows_a - rows_b
        R = _with_bias_block(psd_sqrt(sigmas[i]), A.has_bias)
        sigma_diff = diff @ R

        z_diff = hidden_a[i] - hidden_b[i][perm]

        W = A.matrices[i]
        records.append(
            LayerMatchRecord(
                layer=i + 1,
                naive_cost=float(np.sum(diff * diff)),
                sigma_cost=float(np.sum(sigma_diff * sigma_diff)),
                activation_cost=float(np.sum(z_diff * z_diff)),
                dim_naive=_safe_dim(W @ W.T),
                dim_weighted=_safe_dim(W @ sigmas[i] @ W.T),
                dim_activation=_safe_dim(sigmas[i + 1]),
            )
        )
        prev = perm
    return records


def _safe_dim(S: np.ndarray) -> float:
    """approx_dim, or 0.0 for an all-zero matrix (a dead layer)."""
    S = 0.5 * (S + S.T)
    if not np.any(S):
        return 0.0
    return approx_dim(S)


def total_naive_cost(A: MlpWeights, B: MlpWeights, stack: PermutationStack) -> float:
    """Total naive cost of `stack`, computed from the cost matrices.

    Summed with :func:`~lmcot.assignment.assignment_cost` so that it agrees
    bit-for-bit with the solver's reported optimum.
    """
    total = []
    prev = None
    for i, perm in enumerate(stack.perms):
        C = pairwise_sq_dist(_rows(A, i, None), _rows(B, i, prev))
        total.append(assignment_cost(C, perm))
        prev = perm
    return float(sum(total))
