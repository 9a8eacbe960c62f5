import numpy as np
import pytest

from lmcot import numerics
from lmcot.errors import (
    ArgumentError,
    ConfigurationError,
    DegenerateInputError,
    NotPsdError,
)
from lmcot.numerics import CovarianceSpec


def test_make_rng__same_key_same_stream():
    a = numerics.make_rng(7, 3, 1).standard_normal(5)
    b = numerics.make_rng(7, 3, 1).standard_normal(5)
    c = numerics.make_rng(7, 3, 2).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_child_seed__distinct_and_stable():
    seeds = [numerics.child_seed(42, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert seeds == [numerics.child_seed(42, i) for i in range(100)]
    assert all(0 <= s < 2**64 for s in seeds)


@pytest.mark.parametrize(
    ["spec", "diagonal"],
    [
        (CovarianceSpec.isotropic(3, 2.0), [2.0, 2.0, 2.0]),
        (CovarianceSpec((2, 1), (1.0, 0.5)), [1.0, 1.0, 0.5]),
        (CovarianceSpec.low_dimensional(4, 1, 3.0, 0.0), [3.0, 0.0, 0.0, 0.0]),
        (CovarianceSpec.low_dimensional(2, 2, 3.0, 0.0), [3.0, 3.0]),
    ],
)
def test_covariance_spec__diagonal(spec, diagonal):
    assert spec.diagonal().tolist() == diagonal
    assert spec.dim == len(diagonal)


@pytest.mark.parametrize(
    "spec",
    [
        CovarianceSpec((2,), (1.0, 0.5)),
        CovarianceSpec((0,), (1.0,)),
        CovarianceSpec((1, 1), (0.5, 1.0)),
        CovarianceSpec((1,), (-1.0,)),
    ],
)
def test_covariance_spec__invalid(spec):
    with pytest.raises(ConfigurationError):
        spec.validate()


def test_covariance_spec__eta():
    spec = CovarianceSpec.low_dimensional(10, 2, head=1.0, tail=0.0)
    assert spec.eta(2) == 0.0

    spec = CovarianceSpec.low_dimensional(10, 2, head=1.0, tail=0.25)
    # sqrt(8 * 0.25) / (4 * sqrt(2)) = 0.25
    assert spec.eta(2) == pytest.approx(0.25)

    with pytest.raises(ConfigurationError):
        spec.eta(11)


def test_gaussian_rows__zero_eigenvalue_gives_zero_column(rng):
    spec = CovarianceSpec((2, 1), (1.0, 0.0))
    X = numerics.gaussian_rows(50, spec, rng)
    assert X.shape == (50, 3)
    assert np.all(X[:, 2] == 0.0)


def test_gaussian_rows__variance(rng):
    spec = CovarianceSpec((1, 1), (4.0, 0.25))
    X = numerics.gaussian_rows(20000, spec, rng)
    assert X.var(axis=0) == pytest.approx([4.0, 0.25], rel=0.05)


def test_uniform_rows(rng):
    X = numerics.uniform_rows(100, 4, 0.5, rng)
    assert X.shape == (100, 4)
    assert np.all(np.abs(X) <= 0.5)
    with pytest.raises(ConfigurationError):
        numerics.uniform_rows(3, 4, 0.0, rng)


def test_second_moment():
    Z = np.array([[1.0, -1.0], [2.0, 0.0]])
    S = numerics.second_moment(Z)
    assert np.allclose(S, [[1.0, 1.0], [1.0, 2.0]])
    assert np.array_equal(S, S.T)

    with pytest.raises(ArgumentError):
        numerics.second_moment(np.zeros((3, 0)))


@pytest.mark.parametrize(
    ["S", "expected"],
    [
        (np.eye(5), 5.0),
        (np.diag([1.0, 0.0, 0.0]), 1.0),
        (np.diag([1.0, 1.0, 0.0, 0.0]), 2.0),
        (np.ones((4, 4)), 1.0),
    ],
)
def test_approx_dim(S, expected):
    assert numerics.approx_dim(S) == pytest.approx(expected)


def test_second_moment__psd(rng):
    for _ in range(100):
        m, s = rng.integers(1, 8, size=2)
        S = numerics.second_moment(rng.standard_normal((m, s)))
        assert np.linalg.eigvalsh(S).min() >= -1e-8


def test_approx_dim__scale_invariant(rng):
    for _ in range(20):
        A = rng.standard_normal((5, 3))
        S = A @ A.T
        for c in (1e-3, 0.5, 7.0, 1e4):
            assert numerics.approx_dim(c * S) == pytest.approx(numerics.approx_dim(S), rel=1e-9)


def test_approx_dim__zero_matrix():
    with pytest.raises(DegenerateInputError):
        numerics.approx_dim(np.zeros((3, 3)))


def test_approx_dim__bounds(rng):
    Z = rng.standard_normal((6, 20))
    d = numerics.approx_dim(numerics.second_moment(Z))
    assert 1.0 <= d <= 6.0


def test_sym_eig__reconstructs(rng):
    A = rng.standard_normal((5, 5))
    S = A + A.T
    O, lam = numerics.sym_eig(S)
    assert np.all(np.diff(lam) <= 0)
    assert np.allclose(O @ np.diag(lam) @ O.T, S, atol=1e-10)
    assert np.allclose(O.T @ O, np.eye(5), atol=1e-10)


def test_sym_eig__rejects_asymmetric():
    with pytest.raises(ArgumentError):
        numerics.sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_psd_sqrt(rng):
    A = rng.standard_normal((4, 6))
    S = A @ A.T
    R = numerics.psd_sqrt(S)
    assert np.allclose(R, R.T)
    assert np.allclose(R @ R, S, atol=1e-9)


@pytest.mark.parametrize("rank", [0, 1, 3, 5])
def test_psd_sqrt__projection_is_its_own_root(rng, rank):
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    P = Q[:, :rank] @ Q[:, :rank].T
    # Rounding leaves eigenvalues near 1e-16, whose roots are near 1e-8.
    assert np.allclose(numerics.psd_sqrt(P), P, atol=1e-7)


def test_psd_sqrt__clamps_rounding_noise():
    S = np.diag([1.0, -1e-12])
    R = numerics.psd_sqrt(S)
    assert np.allclose(R, np.diag([1.0, 0.0]))


def test_psd_sqrt__rejects_negative():
    with pytest.raises(NotPsdError):
        numerics.psd_sqrt(np.diag([1.0, -0.5]))


def test_as_matrix__rejects_bad_input():
    with pytest.raises(ArgumentError):
        numerics.as_matrix(np.zeros(3))
    with pytest.raises(ArgumentError):
        numerics.as_matrix(np.array([[np.nan]]))
