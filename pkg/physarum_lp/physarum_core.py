"""Electrical quantities at a positive point and the Physarum vector field ẋ = q - x."""
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatch, InfeasibleCandidate, NonPositivePrimal, NotPositiveDefinite, SingularLaplacian
from .linear_algebra import spd_factorize, spd_solve
from .models import DerivedQuantities, LpInstance, PhysarumState, SpdFactorization, ThomsonComparison

logger = logging.getLogger(__name__)

FEASIBILITY_TOLERANCE = 1e-8

State = Union[PhysarumState, np.ndarray]


@dataclass(frozen=True)
class ElectricalFlow:
    conductances: np.ndarray
    factorization: SpdFactorization
    potentials: np.ndarray
    flow: np.ndarray
    energy: float


def _point(instance: LpInstance, state: State) -> np.ndarray:
    x = state.x if isinstance(state, PhysarumState) else np.asarray(state, dtype=float)
    if x.shape != (instance.cols,):
        raise DimensionMismatch(f"point has shape {x.shape}, instance has {instance.cols} columns")
    nonpositive = np.flatnonzero(~(x > 0))
    if nonpositive.size:
        raise NonPositivePrimal(int(nonpositive[0]))
    return x


def electrical_flow(instance: LpInstance, x: np.ndarray) -> ElectricalFlow:
    """Solve L p = b with L = A C Aᵀ and return q = C Aᵀ p."""
    a = instance.constraint_matrix
    conductances = x / instance.costs
    laplacian = (a * conductances) @ a.T
    laplacian = 0.5 * (laplacian + laplacian.T)
    try:
        factorization = spd_factorize(laplacian)
    except NotPositiveDefinite as e:
        raise SingularLaplacian(f"L = A C Aᵀ is singular at min x = {float(np.min(x)):.3e}") from e
    if factorization.regularization_applied:
        logger.debug(f"Laplacian regularized by {factorization.regularization_applied:.3e}")
    potentials = spd_solve(factorization, instance.rhs)
    flow = conductances * (a.T @ potentials)
    return ElectricalFlow(
        conductances=conductances,
        factorization=factorization,
        potentials=potentials,
        flow=flow,
        energy=float(instance.rhs @ potentials),
    )


def derive(instance: LpInstance, state: State) -> DerivedQuantities:
    x = _point(instance, state)
    ef = electrical_flow(instance, x)
    return DerivedQuantities(
        conductances=ef.conductances,
        resistances=instance.costs / x,
        laplacian_factorization=ef.factorization,
        potentials=ef.potentials,
        flow=ef.flow,
        energy=ef.energy,
    )


def rhs(instance: LpInstance, state: State) -> np.ndarray:
    """C Aᵀ L⁻¹ b - x."""
    x = _point(instance, state)
    return electrical_flow(instance, x).flow - x


def energy(instance: LpInstance, state: State) -> float:
    return derive(instance, state).energy


def _check_feasible(instance: LpInstance, f: np.ndarray) -> None:
    residual = float(np.max(np.abs(instance.constraint_matrix @ f - instance.rhs)))
    if residual > FEASIBILITY_TOLERANCE * max(1.0, float(np.max(np.abs(instance.rhs)))):
        raise InfeasibleCandidate(residual)


def verify_thomson(instance: LpInstance, state: State, candidate_flow: np.ndarray) -> ThomsonComparison:
    """Compare fᵀRf of a feasible f with the electrical energy; the gap is never negative."""
    f = np.asarray(candidate_flow, dtype=float)
    _check_feasible(instance, f)
    derived = derive(instance, state)
    candidate_energy = float(f @ (derived.resistances * f))
    return ThomsonComparison(
        candidate_energy=candidate_energy,
        electrical_energy=derived.energy,
        gap=candidate_energy - derived.energy,
    )


def tellegen_check(instance: LpInstance, state: State, f: np.ndarray) -> float:
    """fᵀAᵀp - E, zero for every feasible f."""
    f = np.asarray(f, dtype=float)
    _check_feasible(instance, f)
    derived = derive(instance, state)
    return float(f @ (instance.constraint_matrix.T @ derived.potentials)) - derived.energy
