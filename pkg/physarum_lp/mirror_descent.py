"""Mirror Descent with the negative-entropy mirror map, on unit-simplex instances.

With ψ(x) = Σ x_j ln x_j the dual coordinates are y_j = 1 + ln x_j and
x = ∇ψ*(y) = exp(y - 1). Descending F(x) = 1ᵀx + ln E(x) in these coordinates,
ẏ = -∇F(x), traces the same curves as the Physarum flow ẋ = q - x.
"""
import logging
from typing import Optional

import numpy as np
from scipy.special import kl_div

from .errors import AbsoluteContinuityViolation, DimensionMismatch, NonPositivePrimal, NotSimplexInstance, TooLarge
from .integrator import fixed_step_path, physarum_field
from .models import DualState, IntegrationConfig, LpInstance, MdComparison
from .oracle import solve_exact

logger = logging.getLogger(__name__)

SIMPLEX_TOLERANCE = 1e-12


def is_unit_simplex(instance: LpInstance) -> bool:
    a = instance.constraint_matrix
    return (
        a.shape[0] == 1
        and np.all(np.abs(a - 1.0) <= SIMPLEX_TOLERANCE)
        and abs(float(instance.rhs[0]) - 1.0) <= SIMPLEX_TOLERANCE
    )


def _require_simplex(instance: LpInstance) -> None:
    if not is_unit_simplex(instance):
        raise NotSimplexInstance(
            f"{instance.name or 'instance'} is not the unit simplex (A = 1ᵀ, b = 1), "
            f"constraint matrix has shape {instance.constraint_matrix.shape}"
        )


def to_dual(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    bad = np.flatnonzero(~(x > 0))
    if bad.size:
        raise NonPositivePrimal(int(bad[0]))
    return 1.0 + np.log(x)


def to_primal(y: np.ndarray) -> np.ndarray:
    return np.exp(np.asarray(y, dtype=float) - 1.0)


def dual_state(x: np.ndarray, t: float = 0.0) -> DualState:
    return DualState(y=to_dual(x), t=t)


def negentropy(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * np.log(x, where=x > 0, out=np.zeros_like(x))))


def legendre_dual_value(y: np.ndarray) -> float:
    """ψ*(y) = Σ exp(y_j - 1)."""
    return float(np.sum(to_primal(y)))


def legendre_dual_gradient(y: np.ndarray) -> np.ndarray:
    return to_primal(y)


def bregman_negentropy(x_prime: np.ndarray, x: np.ndarray) -> float:
    """D_ψ(x', x) = Σ x'_j ln(x'_j/x_j) + Σ x_j - Σ x'_j."""
    x_prime = np.asarray(x_prime, dtype=float)
    x = np.asarray(x, dtype=float)
    if x_prime.shape != x.shape:
        raise DimensionMismatch(f"arguments have shapes {x_prime.shape} and {x.shape}")
    missing = np.flatnonzero((x_prime > 0) & ~(x > 0))
    if missing.size:
        raise AbsoluteContinuityViolation(int(missing[0]))
    return float(np.sum(kl_div(x_prime, x)))


def lyapunov(x_star: np.ndarray, x: np.ndarray) -> float:
    """V(x) = D_ψ(x*, x)."""
    return bregman_negentropy(x_star, x)


def simplex_energy(instance: LpInstance, x: np.ndarray) -> float:
    """E(x) = (Σ x_k / c_k)⁻¹ on the unit simplex."""
    return 1.0 / float(np.sum(np.asarray(x, dtype=float) / instance.costs))


def objective_F(instance: LpInstance, x: np.ndarray) -> float:
    _require_simplex(instance)
    return float(np.sum(x)) + float(np.log(simplex_energy(instance, x)))


def grad_F(instance: LpInstance, x: np.ndarray) -> np.ndarray:
    """(∇F)_j = 1 - E(x)/c_j."""
    _require_simplex(instance)
    x = np.asarray(x, dtype=float)
    bad = np.flatnonzero(~(x > 0))
    if bad.size:
        raise NonPositivePrimal(int(bad[0]))
    return 1.0 - simplex_energy(instance, x) / instance.costs


def md_rhs(instance: LpInstance, y: np.ndarray) -> np.ndarray:
    """ẏ = -∇F(∇ψ*(y)) = E(x)/c - 1."""
    return -grad_F(instance, to_primal(y))


def compare_trajectories(instance: LpInstance, x0: np.ndarray, horizon: float,
                         step_config: Optional[IntegrationConfig] = None) -> MdComparison:
    """Integrate both flows on the same fixed-step grid and report the largest primal gap."""
    _require_simplex(instance)
    config = step_config or IntegrationConfig(adaptive=False, initial_step=1e-2, trace_interval=0.1)
    x0 = np.asarray(x0, dtype=float)
    to_dual(x0)

    times, primal = fixed_step_path(
        physarum_field(instance), x0, config.initial_step, horizon, config.method,
        config.trace_interval, positive=True,
    )
    _, dual = fixed_step_path(
        lambda y: md_rhs(instance, y), to_dual(x0), config.initial_step, horizon, config.method,
        config.trace_interval, positive=False,
    )
    mirrored = to_primal(dual)
    deviations = np.max(np.abs(primal - mirrored), axis=1)

    try:
        x_star = solve_exact(instance).x_star
        values = [lyapunov(x_star, x) for x in mirrored]
    except TooLarge as e:
        logger.warning(f"No Lyapunov trace for {instance.name or 'instance'}: {e}")
        values = None
    logger.info(f"Physarum vs Mirror Descent over t <= {horizon:g}: max deviation {np.max(deviations):.3e}")
    return MdComparison(
        max_deviation=float(np.max(deviations)),
        times=times.tolist(),
        deviations=deviations.tolist(),
        lyapunov=values,
    )
