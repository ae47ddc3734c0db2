"""Exact reference answers for small instances.

solve_exact enumerates every |N|-column basis; solve_flow_kkt computes the electrical
flow from the stationarity system of min fᵀRf s.t. Af = b, independently of the
Laplacian route used by the dynamics.
"""
import logging
import math
import warnings
from itertools import combinations
from typing import List, Tuple

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, Infeasible, NonPositivePrimal, SingularSystem, TooLarge
from .lp_instance import simplex_instance
from .models import LpInstance, OracleSolution

# Set up logging
logger = logging.getLogger(__name__)

MAX_COLUMNS = 20
MAX_BASES = 1_000_000
TIE_TOLERANCE = 1e-9
NONNEGATIVITY_TOLERANCE = 1e-12
BASIS_CONDITION_LIMIT = 1e12


def _basic_solution(instance: LpInstance, basis: Tuple[int, ...]):
    """Basic solution for the given columns, or None for a singular basis."""
    sub = instance.constraint_matrix[:, basis]
    if np.linalg.cond(sub) > BASIS_CONDITION_LIMIT:
        return None
    values = np.linalg.solve(sub, instance.rhs)
    vertex = np.zeros(instance.cols)
    vertex[list(basis)] = values
    return vertex


def enumerate_vertices(instance: LpInstance) -> List[np.ndarray]:
    """All distinct basic feasible solutions, in basis enumeration order."""
    rows, cols = instance.constraint_matrix.shape
    if cols > MAX_COLUMNS:
        raise TooLarge(cols, MAX_COLUMNS, unit="columns")
    bases = math.comb(cols, rows)
    if bases > MAX_BASES:
        raise TooLarge(bases, MAX_BASES)

    scale = max(1.0, float(np.max(np.abs(instance.rhs))))
    vertices: List[np.ndarray] = []
    for basis in combinations(range(cols), rows):
        vertex = _basic_solution(instance, basis)
        if vertex is None or np.min(vertex) < -NONNEGATIVITY_TOLERANCE * scale:
            continue
        vertex = np.where(vertex < 0, 0.0, vertex)
        if any(np.allclose(vertex, seen, rtol=0, atol=TIE_TOLERANCE * scale) for seen in vertices):
            continue
        vertices.append(vertex)
    return vertices


def _lexicographic_key(vertex: np.ndarray) -> Tuple[float, ...]:
    return tuple(np.round(vertex, 9))


def solve_exact(instance: LpInstance) -> OracleSolution:
    """Optimal value and the lexicographically smallest optimal vertex."""
    vertices = enumerate_vertices(instance)
    if not vertices:
        raise Infeasible(f"{instance.name or 'instance'} has no nonnegative basic solution")

    costs = np.array([float(instance.costs @ v) for v in vertices])
    opt = float(np.min(costs))
    optimal = [v for v, value in zip(vertices, costs) if value - opt <= TIE_TOLERANCE * max(1.0, abs(opt))]
    optimal.sort(key=_lexicographic_key)
    x_star = optimal[0]

    logger.info(f"Oracle: {len(vertices)} vertices, opt = {opt:.12g}, {len(optimal)} optimal")
    return OracleSolution(
        opt=float(instance.costs @ x_star),
        x_star=x_star,
        all_optimal_vertices=optimal,
        vertex_count=len(vertices),
    )


def kkt_system(instance: LpInstance, resistances: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Solve [[R, Aᵀ], [A, 0]] (f, -λ) = (0, b); returns f and λ with R f = Aᵀλ."""
    r = np.asarray(resistances, dtype=float)
    rows, cols = instance.constraint_matrix.shape
    if r.shape != (cols,):
        raise DimensionMismatch(f"resistances have shape {r.shape}, instance has {cols} columns")
    bad = np.flatnonzero(~(r > 0))
    if bad.size:
        raise NonPositivePrimal(int(bad[0]))

    a = instance.constraint_matrix
    system = np.block([[np.diag(r), a.T], [a, np.zeros((rows, rows))]])
    rhs = np.concatenate([np.zeros(cols), instance.rhs])
    try:
        with warnings.catch_warnings():
            # an ill-conditioned solve only warns; treat it as singular
            warnings.simplefilter("error", linalg.LinAlgWarning)
            solution = linalg.solve(system, rhs, assume_a="sym", check_finite=False)
    except (linalg.LinAlgError, linalg.LinAlgWarning) as e:
        raise SingularSystem(f"KKT system is singular: {e}") from e
    if not np.all(np.isfinite(solution)):
        raise SingularSystem("KKT solve produced non-finite values")
    return solution[:cols], -solution[cols:]


def solve_flow_kkt(instance: LpInstance, resistances: np.ndarray) -> np.ndarray:
    return kkt_system(instance, resistances)[0]


def main():
    # Example usage
    instance = simplex_instance([1.0, 2.0], name="two-edge simplex")
    solution = solve_exact(instance)
    print(f"opt = {solution.opt}, x* = {solution.x_star}")
    print(f"electrical flow at x = (1, 1): {solve_flow_kkt(instance, instance.costs / np.ones(2))}")


if __name__ == "__main__":
    main()
