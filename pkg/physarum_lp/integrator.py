"""Explicit Euler and classical RK4 integration of ẋ = q - x.

Positivity is kept by rejecting and shrinking steps, never by clamping x.
With `adaptive` set, step doubling controls the componentwise relative error.
"""
import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from .diagnostics import cost, kl, xi
from .errors import IntegrationError, PositivityViolation, SingularLaplacian, StepCollapse
from .lp_instance import infeasibility
from .models import IntegrationConfig, IntegratorStats, LpInstance, OracleSolution, PhysarumState, TraceRecord, TrajectoryTrace
from .physarum_core import ElectricalFlow, electrical_flow

# Set up logging
logger = logging.getLogger(__name__)

STATIONARY_TOLERANCE = 1e-9
MAX_HALVINGS = 40
SAFETY = 0.9
GROWTH_LIMIT = 4.0
SHRINK_LIMIT = 0.1
ORDER = {"euler": 1, "rk4": 4}
# a step this close to the next stop is stretched onto it
SNAP_TOLERANCE = 1e-9

# stage index reported for the step result itself
RESULT_STAGE = 0

VectorField = Callable[[np.ndarray], np.ndarray]


def _check_positive(z: np.ndarray, stage: int) -> None:
    bad = np.flatnonzero(~(z > 0))
    if bad.size:
        raise PositivityViolation(int(bad[0]), stage)


def rk_step(field: VectorField, z: np.ndarray, h: float, method: str,
            k1: Optional[np.ndarray] = None, positive: bool = True) -> np.ndarray:
    """One Euler or RK4 step; with `positive`, every stage point must stay > 0."""
    if k1 is None:
        k1 = field(z)
    if method == "euler":
        result = z + h * k1
    elif method == "rk4":
        z2 = z + 0.5 * h * k1
        if positive:
            _check_positive(z2, 2)
        k2 = field(z2)
        z3 = z + 0.5 * h * k2
        if positive:
            _check_positive(z3, 3)
        k3 = field(z3)
        z4 = z + h * k3
        if positive:
            _check_positive(z4, 4)
        k4 = field(z4)
        result = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise IntegrationError(f"unknown method {method!r}")
    if positive:
        _check_positive(result, RESULT_STAGE)
    return result


def physarum_field(instance: LpInstance, stats: Optional[IntegratorStats] = None) -> VectorField:
    def field(x: np.ndarray) -> np.ndarray:
        ef = electrical_flow(instance, x)
        if stats is not None and ef.factorization.regularization_applied:
            stats.regularizations += 1
        return ef.flow - x
    return field


def step(instance: LpInstance, state: PhysarumState, h: float, method: str = "rk4") -> PhysarumState:
    if not h > 0:
        raise IntegrationError(f"step size must be positive, got {h!r}")
    x_new = rk_step(physarum_field(instance), np.asarray(state.x), h, method)
    return PhysarumState(x=x_new, t=state.t + h)


def _trace_record(instance: LpInstance, t: float, x: np.ndarray, ef: ElectricalFlow,
                  oracle: Optional[OracleSolution], xi_star: Optional[np.ndarray]) -> TraceRecord:
    total = cost(instance, x)
    divergence = potential = None
    if oracle is not None:
        divergence = kl(xi_star, xi(instance, x))
        potential = float(np.log(total / oracle.opt)) + divergence
    return TraceRecord(
        t=t,
        x=x,
        cost=total,
        energy=ef.energy,
        infeasibility=infeasibility(instance, x),
        kl=divergence,
        potential=potential,
    )


def _attempt(field: VectorField, x: np.ndarray, k1: np.ndarray, h: float,
             config: IntegrationConfig) -> Tuple[np.ndarray, float]:
    """Proposed next state and its relative error estimate (0 without step doubling)."""
    full = rk_step(field, x, h, config.method, k1)
    if not config.adaptive:
        return full, 0.0
    half = rk_step(field, x, 0.5 * h, config.method, k1)
    double = rk_step(field, half, 0.5 * h, config.method)
    return double, float(np.max(np.abs(double - full) / double))


def integrate(instance: LpInstance, initial: PhysarumState, config: IntegrationConfig,
              oracle: Optional[OracleSolution] = None) -> TrajectoryTrace:
    """Integrate from `initial` until max_time or stationarity, sampling every trace_interval."""
    stats = IntegratorStats()
    field = physarum_field(instance, stats)
    xi_star = xi(instance, oracle.x_star) if oracle is not None else None
    exponent = 1.0 / (ORDER[config.method] + 1)
    interval = config.trace_interval
    end = config.max_time

    x = np.array(initial.x, dtype=float)
    t = float(initial.t)
    sample_k = int(np.floor(t / interval)) + 1
    h = config.initial_step
    records: List[TraceRecord] = []
    record_due = True
    converged = False
    termination = "max_time"

    logger.info(f"Integrating {instance.name or 'instance'} with {config.method} up to t={end:g}")
    while True:
        try:
            ef = electrical_flow(instance, x)
        except SingularLaplacian as e:
            logger.error(f"Singular Laplacian at t={t:.6g}: {str(e)}")
            raise SingularLaplacian(f"at t={t:.6g}: {e}") from e

        if record_due:
            records.append(_trace_record(instance, t, x, ef, oracle, xi_star))
            record_due = False
        if t >= end:
            break

        k1 = ef.flow - x
        if config.stop_when_stationary and np.max(np.abs(k1)) <= STATIONARY_TOLERANCE * np.max(np.abs(x)):
            converged = True
            termination = "stationary"
            break

        sample_time = sample_k * interval
        next_stop = min(sample_time, end)
        remaining = next_stop - t
        truncated = remaining <= h * (1.0 + SNAP_TOLERANCE)
        h_try = remaining if truncated else h
        reaches_stop = truncated
        rejected = False
        for _ in range(MAX_HALVINGS + 1):
            error = 0.0
            try:
                candidate, error = _attempt(field, x, k1, h_try, config)
                if not np.all(candidate >= config.positivity_floor_ratio * x):
                    candidate = None
            except (PositivityViolation, SingularLaplacian) as e:
                logger.debug(f"Rejected step h={h_try:.3e} at t={t:.6g}: {str(e)}")
                candidate = None

            if candidate is None:
                h_try *= 0.5
            elif config.adaptive and error > config.rtol:
                h_try *= max(SHRINK_LIMIT, SAFETY * (config.rtol / error) ** exponent)
            else:
                break
            stats.rejections += 1
            rejected = True
            reaches_stop = False
        else:
            logger.error(f"Step size collapsed at t={t:.6g}")
            raise StepCollapse(t, x)

        t = next_stop if reaches_stop else t + h_try
        x = candidate
        stats.steps += 1

        if config.adaptive:
            grown = h_try * min(GROWTH_LIMIT, SAFETY * (config.rtol / max(error, 1e-300)) ** exponent)
            h = max(h, grown) if truncated and not rejected else grown
        else:
            h = config.initial_step

        if reaches_stop and next_stop == sample_time:
            record_due = True
            sample_k += 1

    if records[-1].t < t:
        records.append(_trace_record(instance, t, x, ef, oracle, xi_star))

    logger.info(
        f"Integration stopped at t={t:.6g} ({termination}): {stats.steps} steps, "
        f"{stats.rejections} rejections, {stats.regularizations} regularizations"
    )
    return TrajectoryTrace(records=records, stats=stats, converged=converged, termination=termination)


def fixed_step_path(field: VectorField, z0: np.ndarray, h: float, horizon: float, method: str,
                    sample_interval: float, positive: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """Fixed-step integration sampled every `sample_interval`; a failing step is split in halves."""
    times = [0.0]
    states = [np.array(z0, dtype=float)]
    z = states[0]
    t = 0.0
    sample_k = 1
    while t < horizon:
        sample_time = min(sample_k * sample_interval, horizon)
        while t < sample_time:
            remaining = sample_time - t
            h_step = remaining if remaining <= h * (1.0 + SNAP_TOLERANCE) else h
            z = _split_step(field, z, h_step, method, positive, t)
            t = sample_time if h_step == remaining else t + h_step
        times.append(t)
        states.append(z)
        sample_k += 1
    return np.array(times), np.array(states)


def _split_step(field: VectorField, z: np.ndarray, h: float, method: str, positive: bool,
                t: float, depth: int = 0) -> np.ndarray:
    try:
        return rk_step(field, z, h, method, positive=positive)
    except (PositivityViolation, SingularLaplacian):
        if depth >= MAX_HALVINGS:
            raise StepCollapse(t, z)
        half = _split_step(field, z, 0.5 * h, method, positive, t, depth + 1)
        return _split_step(field, half, 0.5 * h, method, positive, t + 0.5 * h, depth + 1)
