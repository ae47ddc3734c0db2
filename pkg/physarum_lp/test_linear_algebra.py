import numpy as np
import pytest

from physarum_lp.conftest import random_spd
from physarum_lp.errors import AsymmetricInput, DimensionMismatch, NotPositiveDefinite
from physarum_lp.linear_algebra import numerical_rank, spd_factorize, spd_solve


def test_identity_factor():
    f = spd_factorize(np.eye(3))
    np.testing.assert_array_equal(f.factor, np.eye(3))
    assert f.regularization_applied == 0.0
    assert f.dimension == 3


def test_hand_cholesky():
    f = spd_factorize(np.array([[4.0, 2.0], [2.0, 3.0]]))
    np.testing.assert_allclose(f.factor, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], rtol=1e-14)


def test_indefinite():
    with pytest.raises(NotPositiveDefinite):
        spd_factorize(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_asymmetric():
    with pytest.raises(AsymmetricInput):
        spd_factorize(np.array([[2.0, 1.0], [0.0, 2.0]]))


def test_not_square():
    with pytest.raises(DimensionMismatch):
        spd_factorize(np.ones((2, 3)))


def test_singular_psd_is_regularized():
    f = spd_factorize(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert f.regularization_applied == pytest.approx(1e-12)
    reconstructed = f.factor @ f.factor.T
    np.testing.assert_allclose(reconstructed, np.ones((2, 2)) + 1e-12 * np.eye(2), rtol=0, atol=1e-10)


@pytest.mark.parametrize(
    "matrix, rhs, expected",
    [
        (np.eye(2), [3.0, 5.0], [3.0, 5.0]),
        (np.diag([2.0, 4.0]), [2.0, 4.0], [1.0, 1.0]),
    ],
)
def test_small_solves(matrix, rhs, expected):
    np.testing.assert_allclose(spd_solve(spd_factorize(matrix), rhs), expected, rtol=1e-14)


def test_solve_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        spd_solve(spd_factorize(np.eye(2)), [1.0, 2.0, 3.0])


def test_random_spd_recovers_solution(rng):
    for n in (1, 3, 10):
        for _ in range(5):
            m = random_spd(rng, n)
            v = rng.standard_normal(n)
            f = spd_factorize(m)
            assert f.regularization_applied == 0.0
            np.testing.assert_allclose(f.factor @ f.factor.T, m, rtol=0, atol=1e-10 * np.max(np.abs(m)))
            recovered = spd_solve(f, m @ v)
            assert np.max(np.abs(recovered - v)) <= 1e-8 * np.max(np.abs(v))


@pytest.mark.parametrize(
    "matrix, rank",
    [
        ([[1.0, 1.0]], 1),
        ([[1.0, 1.0], [2.0, 2.0]], 1),
        ([[1.0, 0.0, 1.0], [-1.0, 1.0, 0.0]], 2),
        ([[0.0, 0.0]], 0),
    ],
)
def test_numerical_rank(matrix, rank):
    assert numerical_rank(np.array(matrix)) == rank
