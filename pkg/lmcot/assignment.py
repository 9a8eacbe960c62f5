"""Exact linear assignment and Wasserstein distances between empirical measures.

For two uniform empirical measures with the same number of atoms, the optimal
transport plan can be taken to be a permutation (the extreme points of the
doubly stochastic matrices are permutation matrices). So the p-Wasserstein
distance between the row sets of two m x n matrices reduces to one linear
assignment problem on the m x m matrix of pairwise costs.

A permutation is stored as an integer array `perm` where ``perm[i]`` is the
column assigned to row ``i``.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from lmcot.consts import BRUTE_FORCE_MAX_N
from lmcot.errors import ArgumentError, ConfigurationError, SizeError
from lmcot.numerics import as_matrix


def _as_cost_matrix(C) -> np.ndarray:
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ArgumentError(f"Cost matrix must be square, got shape {C.shape}.")
    if not np.all(np.isfinite(C)):
        raise ArgumentError("Cost matrix has non-finite entries.")
    return C


def is_permutation(perm, n: int | None = None) -> bool:
    perm = np.asarray(perm)
    if perm.ndim != 1 or (n is not None and perm.size != n):
        return False
    return bool(np.array_equal(np.sort(perm), np.arange(perm.size)))


def invert_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.intp)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(perm.size)
    return inverse


def assignment_cost(C, perm) -> float:
    """Return sum_i C[i, perm[i]], correctly rounded.

    We use `math.fsum` so that two permutations with the same exact cost always
    report the same float, whatever order their terms come in.
    """
    C = np.asarray(C, dtype=np.float64)
    perm = np.asarray(perm, dtype=np.intp)
    return math.fsum(C[np.arange(perm.size), perm].tolist())


def solve_lap(C) -> tuple[np.ndarray, float]:
    """Solve min_perm sum_i C[i, perm[i]] exactly.

    :param C: a square matrix of finite costs.
    :return: the optimal permutation and its total cost.
    """
    C = _as_cost_matrix(C)
    if C.shape[0] == 0:
        return np.zeros(0, dtype=np.intp), 0.0
    rows, cols = linear_sum_assignment(C)
    perm = np.empty(C.shape[0], dtype=np.intp)
    perm[rows] = cols
    return perm, assignment_cost(C, perm)


def brute_force_lap(C) -> tuple[np.ndarray, float]:
    """Exhaustive assignment over all n! permutations (n <= 8).

    Ties go to the lexicographically smallest permutation. This is a test
    oracle for :func:`solve_lap`.
    """
    C = _as_cost_matrix(C)
    n = C.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise SizeError(f"brute_force_lap supports n <= {BRUTE_FORCE_MAX_N}, got {n}.")

    best_perm, best_cost = None, math.inf
    # itertools.permutations yields in lexicographic order, so a strict
    # comparison keeps the smallest mapping among ties.
    for candidate in itertools.permutations(range(n)):
        cost = assignment_cost(C, candidate)
        if cost < best_cost:
            best_perm, best_cost = candidate, cost
    return np.array(best_perm, dtype=np.intp), best_cost


def pairwise_sq_dist(X, Y) -> np.ndarray:
    """Squared Euclidean distances between the rows of `X` and `Y`.

    Computed from the differences, so identical rows are exactly 0 apart.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape != Y.shape:
        raise ArgumentError(f"Shape mismatch: {X.shape} vs {Y.shape}.")
    return cdist(X, Y, "sqeuclidean")


def w2_squared(X, Y) -> float:
    """Squared 2-Wasserstein distance between the row empirical measures."""
    C = pairwise_sq_dist(X, Y)
    _, cost = solve_lap(C)
    return cost / C.shape[0]


def wasserstein(X, Y, p: int = 2) -> float:
    """Exact p-Wasserstein distance (p in {1, 2}) between row empirical measures.

    :param X: an m x n matrix; each row is one atom of weight 1/m.
    :param Y: an m x n matrix.
    :param p: the order of the distance.
    """
    if p not in (1, 2):
        raise ConfigurationError(f"p must be 1 or 2, got {p}.")
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] < 1:
        raise ArgumentError("Empirical measures need at least one atom.")
    if p == 2:
        return math.sqrt(w2_squared(X, Y))

    if X.shape != Y.shape:
        raise ArgumentError(f"Shape mismatch: {X.shape} vs {Y.shape}.")
    C = cdist(X, Y, "euclidean")
    _, cost = solve_lap(C)
    return cost / C.shape[0]
