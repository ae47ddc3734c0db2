"""Cost, normalized distributions, KL divergence, the potential Φ and the convergence-time bounds.

Φ(x) = ln(cost(x)/opt) + KL(ξ*, ξ(x)) with ξ_j = c_j x_j / cost(x). Along a feasible
trajectory Φ is nonnegative, and it drops at rate at least ε/2 while
cost ≥ (1+ε)²·opt; that gives the bound 6Φ(0)/ε on the time to (1+ε)-accuracy.
"""
import logging
from typing import Optional

import numpy as np
from scipy.special import rel_entr

from .errors import (
    AbsoluteContinuityViolation,
    DiagnosticError,
    DimensionMismatch,
    InfeasibleStart,
    NotNormalized,
    ZeroCost,
)
from .lp_instance import infeasibility
from .models import DiagnosticRecord, LemmaReport, LemmaViolation, LpInstance, OracleSolution, RateReport, TrajectoryTrace
from .physarum_core import electrical_flow

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-9
FEASIBLE_START_TOLERANCE = 1e-8
MONOTONE_SLACK = 1e-6


def cost(instance: LpInstance, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != instance.costs.shape:
        raise DimensionMismatch(f"point has shape {x.shape}, costs have shape {instance.costs.shape}")
    return float(instance.costs @ x)


def xi(instance: LpInstance, x: np.ndarray) -> np.ndarray:
    """Cost-weighted normalization c_j x_j / cᵀx."""
    total = cost(instance, x)
    if not total > 0:
        raise ZeroCost(f"cost {total!r} cannot be normalized")
    return instance.costs * np.asarray(x, dtype=float) / total


def kl(p_star: np.ndarray, p: np.ndarray) -> float:
    """Σ p*_j ln(p*_j / p_j), with 0·ln(0/p) = 0."""
    p_star = np.asarray(p_star, dtype=float)
    p = np.asarray(p, dtype=float)
    if p_star.shape != p.shape:
        raise DimensionMismatch(f"distributions have shapes {p_star.shape} and {p.shape}")
    for dist in (p_star, p):
        if abs(float(np.sum(dist)) - 1.0) > NORMALIZATION_TOLERANCE:
            raise NotNormalized(float(np.sum(dist)))
    missing = np.flatnonzero((p_star > 0) & ~(p > 0))
    if missing.size:
        raise AbsoluteContinuityViolation(int(missing[0]))
    return float(np.sum(rel_entr(p_star, p)))


def potential(instance: LpInstance, x: np.ndarray, oracle: OracleSolution) -> float:
    """Negative values are possible off the feasible set, where cost can fall below opt."""
    return float(np.log(cost(instance, x) / oracle.opt)) + kl(xi(instance, oracle.x_star), xi(instance, x))


def _require_feasible_start(instance: LpInstance, x0: np.ndarray, eps: float) -> None:
    if not eps > 0:
        raise DiagnosticError(f"accuracy eps must be positive, got {eps!r}")
    residual = infeasibility(instance, x0)
    if residual > FEASIBLE_START_TOLERANCE * max(1.0, float(np.linalg.norm(instance.rhs))):
        raise InfeasibleStart(residual)


def bound_time_kl(instance: LpInstance, x0: np.ndarray, oracle: OracleSolution, eps: float) -> float:
    """(6/ε)·(ln(cost(x0)/opt) + KL(ξ*, ξ(x0)))."""
    _require_feasible_start(instance, x0, eps)
    return 6.0 / eps * potential(instance, x0, oracle)


def bound_time_mu(instance: LpInstance, x0: np.ndarray, oracle: OracleSolution, eps: float) -> float:
    """(6/ε)·(2 ln(cost(x0)/opt) + ln μ) with μ = max_j x*_j / x0_j."""
    _require_feasible_start(instance, x0, eps)
    x0 = np.asarray(x0, dtype=float)
    missing = np.flatnonzero((oracle.x_star > 0) & ~(x0 > 0))
    if missing.size:
        raise AbsoluteContinuityViolation(int(missing[0]))
    mu = float(np.max(oracle.x_star / x0))
    return 6.0 / eps * (2.0 * np.log(cost(instance, x0) / oracle.opt) + np.log(mu))


def diagnose(instance: LpInstance, x: np.ndarray, t: float, oracle: OracleSolution) -> DiagnosticRecord:
    x = np.asarray(x, dtype=float)
    total = cost(instance, x)
    energy = electrical_flow(instance, x).energy
    log_ratio = float(np.log(total / oracle.opt))
    divergence = kl(xi(instance, oracle.x_star), xi(instance, x))
    return DiagnosticRecord(
        t=t,
        cost=total,
        energy=energy,
        infeasibility=infeasibility(instance, x),
        xi=xi(instance, x),
        kl=divergence,
        potential=log_ratio + divergence,
        energy_cost_ratio=energy / total,
    )


def instantaneous_rates(instance: LpInstance, x: np.ndarray, oracle: OracleSolution) -> RateReport:
    """Exact time derivatives of ln cost, the cross entropy, KL and Φ at x, from one Laplacian solve."""
    x = np.asarray(x, dtype=float)
    ef = electrical_flow(instance, x)
    total = cost(instance, x)
    xi_star = xi(instance, oracle.x_star)
    support = xi_star > 0

    dlog_cost = float(instance.costs @ (ef.flow - x)) / total
    dcross = -float(np.sum(xi_star[support] * (ef.flow[support] / x[support] - 1.0)))
    root = float(np.sqrt(ef.energy / total))
    return RateReport(
        dlog_cost=dlog_cost,
        dlog_cost_bound=root - 1.0,
        dcross_entropy=dcross,
        dcross_entropy_identity=1.0 - ef.energy / oracle.opt,
        dkl=dcross + dlog_cost,
        dkl_bound=root - ef.energy / oracle.opt,
        dpotential=dcross + 2.0 * dlog_cost,
    )


def time_to_accuracy(trace: TrajectoryTrace, oracle: OracleSolution, eps: float) -> Optional[float]:
    """First recorded time with cost ≤ (1+ε)·opt."""
    for record in trace.records:
        if record.cost <= (1.0 + eps) * oracle.opt:
            return record.t
    return None


def _derivative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    return np.gradient(values, times, edge_order=2 if len(times) > 2 else 1)


def lemma_rate_checks(trace: TrajectoryTrace, oracle: OracleSolution,
                      instance: Optional[LpInstance] = None,
                      eps: float = 0.1, tol: float = 1e-3) -> LemmaReport:
    """Differentiate the trace numerically and test the rate lemmas sample by sample.

    Checks: (a) d ln cost/dt ≤ √(E/cost) - 1; (b) dKL/dt ≤ √(E/cost) - E/opt;
    (c) dΦ/dt ≤ -ε/2 wherever cost ≥ (1+ε)²·opt; (d) the cross-entropy term
    Σ ξ*_j ln(x*_j/x_j) moves at exactly 1 - E/opt.
    """
    report = LemmaReport(segments_tested={"cost": 0, "kl": 0, "potential": 0, "cross_entropy": 0})
    records = trace.records
    if len(records) < 2:
        return report

    times = trace.times
    costs = np.array([r.cost for r in records])
    energies = np.array([r.energy for r in records])
    if all(r.kl is not None for r in records):
        kls = np.array([r.kl for r in records])
    elif instance is not None:
        xi_star = xi(instance, oracle.x_star)
        kls = np.array([kl(xi_star, xi(instance, r.x)) for r in records])
    else:
        raise DiagnosticError("trace has no KL values and no instance was given to compute them")

    log_ratio = np.log(costs / oracle.opt)
    potentials = log_ratio + kls
    cross = kls - log_ratio

    d_log_cost = _derivative(log_ratio, times)
    d_kl = _derivative(kls, times)
    d_potential = _derivative(potentials, times)
    d_cross = _derivative(cross, times)

    root = np.sqrt(energies / costs)
    gamma = energies / oracle.opt
    threshold = (1.0 + eps) ** 2 * oracle.opt

    def flag(check: str, i: int, observed: float, bound: float) -> None:
        report.violations.append(LemmaViolation(check=check, t=float(times[i]), observed=observed, bound=bound))

    for i in range(len(records)):
        report.segments_tested["cost"] += 1
        if d_log_cost[i] > root[i] - 1.0 + tol:
            flag("cost", i, float(d_log_cost[i]), float(root[i] - 1.0))

        report.segments_tested["kl"] += 1
        if d_kl[i] > root[i] - gamma[i] + tol:
            flag("kl", i, float(d_kl[i]), float(root[i] - gamma[i]))

        report.segments_tested["cross_entropy"] += 1
        if abs(d_cross[i] - (1.0 - gamma[i])) > tol:
            flag("cross_entropy", i, float(d_cross[i]), float(1.0 - gamma[i]))

        if costs[i] >= threshold:
            report.segments_tested["potential"] += 1
            if d_potential[i] > -eps / 2.0 + tol:
                flag("potential", i, float(d_potential[i]), -eps / 2.0)

    for i in range(len(records) - 1):
        if potentials[i + 1] > potentials[i] + MONOTONE_SLACK:
            message = f"potential rose by {potentials[i + 1] - potentials[i]:.3e} on [{times[i]:.4g}, {times[i + 1]:.4g}]"
            if costs[i] >= threshold:
                flag("potential_monotone", i, float(potentials[i + 1]), float(potentials[i]))
            else:
                report.notes.append(message)

    if report.violations:
        logger.warning(f"Lemma rate checks found {len(report.violations)} violations")
    return report
