import numpy as np
import pytest
from scipy import linalg

from physarum_lp.conftest import random_feasible_instances
from physarum_lp.errors import DimensionMismatch, InfeasibleCandidate, NonPositivePrimal
from physarum_lp.models import PhysarumState
from physarum_lp.oracle import solve_flow_kkt
from physarum_lp.physarum_core import derive, energy, rhs, tellegen_check, verify_thomson


def test_two_path_at_ones(two_path):
    derived = derive(two_path, PhysarumState(x=[1.0, 1.0]))
    np.testing.assert_allclose(derived.laplacian_factorization.factor @ derived.laplacian_factorization.factor.T, [[1.5]])
    np.testing.assert_allclose(derived.potentials, [2 / 3], rtol=1e-12)
    np.testing.assert_allclose(derived.flow, [2 / 3, 1 / 3], rtol=1e-12)
    assert derived.energy == pytest.approx(2 / 3, rel=1e-12)
    np.testing.assert_allclose(derived.resistances * derived.conductances, [1.0, 1.0])


def test_uniform_costs_fixed_point(uniform_pair):
    derived = derive(uniform_pair, PhysarumState(x=[0.5, 0.5]))
    np.testing.assert_allclose(derived.flow, [0.5, 0.5], rtol=1e-12)
    assert derived.energy == pytest.approx(1.0, rel=1e-12)


def test_scalar_instance(single_edge):
    derived = derive(single_edge, np.array([2.0]))
    np.testing.assert_allclose(derived.potentials, [2.5], rtol=1e-12)
    np.testing.assert_allclose(derived.flow, [1.0], rtol=1e-12)
    assert derived.energy == pytest.approx(2.5, rel=1e-12)


def test_rhs_examples(two_path, uniform_pair):
    np.testing.assert_allclose(rhs(two_path, np.array([1.0, 1.0])), [-1 / 3, -2 / 3], rtol=1e-12)
    np.testing.assert_allclose(rhs(uniform_pair, np.array([0.5, 0.5])), [0.0, 0.0], atol=1e-15)


def test_rhs_drains_expensive_edge(two_path):
    h = 1e-6
    assert rhs(two_path, np.array([1 - h, h]))[1] < 0


@pytest.mark.parametrize("x, expected", [([0.5, 0.5], 4 / 3), ([1.0, 1.0], 2 / 3)])
def test_energy_on_simplex(two_path, x, expected):
    assert energy(two_path, np.array(x)) == pytest.approx(expected, rel=1e-12)


def test_energy_equals_cost_for_uniform_costs(uniform_pair, rng):
    for _ in range(5):
        x = rng.dirichlet(np.ones(2))
        assert energy(uniform_pair, x) == pytest.approx(1.0, rel=1e-12)


def test_non_positive_point(two_path):
    with pytest.raises(NonPositivePrimal) as exc:
        rhs(two_path, np.array([1.0, 0.0]))
    assert exc.value.index == 1
    with pytest.raises(DimensionMismatch):
        rhs(two_path, np.array([1.0, 1.0, 1.0]))


def test_thomson_examples(two_path):
    x = np.array([1.0, 1.0])
    q = derive(two_path, x).flow
    assert verify_thomson(two_path, x, q).gap == pytest.approx(0.0, abs=1e-14)
    comparison = verify_thomson(two_path, x, [1.0, 0.0])
    assert comparison.candidate_energy == pytest.approx(1.0)
    assert comparison.gap == pytest.approx(1 / 3, rel=1e-12)


def test_thomson_candidate_x_is_cost(two_path):
    x = np.array([0.25, 0.75])
    comparison = verify_thomson(two_path, x, x)
    assert comparison.candidate_energy == pytest.approx(float(two_path.costs @ x))
    assert comparison.gap >= 0


def test_infeasible_candidate(two_path):
    with pytest.raises(InfeasibleCandidate):
        verify_thomson(two_path, np.array([1.0, 1.0]), [1.0, 1.0])
    with pytest.raises(InfeasibleCandidate):
        tellegen_check(two_path, np.array([1.0, 1.0]), [0.5, 0.0])


def test_tellegen_examples(two_path):
    x = np.array([1.0, 1.0])
    assert tellegen_check(two_path, x, derive(two_path, x).flow) == pytest.approx(0.0, abs=1e-14)
    assert tellegen_check(two_path, x, [1.0, 0.0]) == pytest.approx(0.0, abs=1e-14)
    feasible = np.array([0.3, 0.7])
    assert tellegen_check(two_path, feasible, feasible) == pytest.approx(0.0, abs=1e-14)


def test_random_identities():
    rng = np.random.default_rng(11)
    for instance, interior in random_feasible_instances(11, 20, max_rows=6, max_cols=10):
        x = rng.uniform(0.1, 3.0, instance.cols)
        derived = derive(instance, x)
        a = instance.constraint_matrix
        q, p = derived.flow, derived.potentials

        dual = a.T @ p
        assert np.max(np.abs(derived.resistances * q - dual)) <= 1e-8 * np.max(np.abs(dual))
        assert np.max(np.abs(a @ q - instance.rhs)) <= 1e-8 * max(1.0, np.max(np.abs(instance.rhs)))

        laplacian = (a * derived.conductances) @ a.T
        energies = [float(q @ (derived.resistances * q)), float(instance.rhs @ p), float(p @ laplacian @ p)]
        np.testing.assert_allclose(energies, derived.energy, rtol=1e-8)

        # conservation: A·rhs(x) = b - Ax
        np.testing.assert_allclose(a @ rhs(instance, x), instance.rhs - a @ x, rtol=0, atol=1e-8 * max(1.0, np.max(np.abs(a @ x))))

        assert np.max(np.abs(q - solve_flow_kkt(instance, derived.resistances))) <= 1e-7

        # q plus a null-space perturbation is still feasible and never beats E
        null = linalg.null_space(a)
        if null.size:
            f = q + null @ rng.standard_normal(null.shape[1])
            assert verify_thomson(instance, x, f).gap >= -1e-8
            assert abs(tellegen_check(instance, x, f)) <= 1e-8 * max(1.0, derived.energy)
