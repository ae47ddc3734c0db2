"""LP instances in standard equality form: validation, network construction and JSON files."""
import json
import logging
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from .errors import (
    DimensionMismatch,
    DisconnectedGraph,
    EmptyInstance,
    InstanceError,
    InvalidNetwork,
    NonPositiveCost,
    ParseError,
    RankDeficient,
    SchemaError,
    UnbalancedSupplies,
    ZeroRhs,
)
from .linear_algebra import numerical_rank
from .models import InstanceFile, LpInstance, NetworkFile, NetworkSpec, ValidatedInstance

logger = logging.getLogger(__name__)

# JSON key -> domain field reported in SchemaError
INSTANCE_FIELDS = {"A": "constraint_matrix", "b": "rhs", "c": "costs"}
NETWORK_FIELDS = {"nodes": "node_count", "edges": "edges", "supplies": "supplies"}

SUPPLY_BALANCE_TOLERANCE = 1e-9


def validate(instance: LpInstance) -> ValidatedInstance:
    """Check positive costs and full row rank; b = 0 is rejected as well."""
    a = instance.constraint_matrix
    if a.size == 0 or instance.rhs.size == 0 or instance.costs.size == 0:
        raise EmptyInstance("instance has no rows or no columns")
    rows, cols = a.shape
    if instance.rhs.shape[0] != rows:
        raise DimensionMismatch(f"rhs has length {instance.rhs.shape[0]}, matrix has {rows} rows")
    if instance.costs.shape[0] != cols:
        raise DimensionMismatch(f"costs has length {instance.costs.shape[0]}, matrix has {cols} columns")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(instance.rhs)) and np.all(np.isfinite(instance.costs))):
        raise InstanceError("instance contains non-finite numbers")

    bad = np.flatnonzero(instance.costs <= 0)
    if bad.size:
        raise NonPositiveCost(int(bad[0]), float(instance.costs[bad[0]]))

    rank = numerical_rank(a)
    if rank < rows:
        raise RankDeficient(rank, rows)

    if not np.any(instance.rhs != 0):
        raise ZeroRhs("b = 0 admits only the zero solution")

    return ValidatedInstance(instance=instance, rank=rank)


def infeasibility(instance: LpInstance, x: np.ndarray) -> float:
    return float(np.linalg.norm(instance.constraint_matrix @ x - instance.rhs))


def simplex_instance(costs, name: Optional[str] = None) -> LpInstance:
    """The unit simplex {x ≥ 0 : 1ᵀx = 1} with the given costs."""
    costs = np.asarray(costs, dtype=float)
    return LpInstance(
        constraint_matrix=np.ones((1, costs.shape[0])),
        rhs=[1.0],
        costs=costs,
        name=name,
    )


def uniform_start(instance: LpInstance) -> np.ndarray:
    """α·1 with α the least-squares fit of A(α1) = b, or 1 when that is not positive."""
    column_sum = instance.constraint_matrix @ np.ones(instance.cols)
    denom = float(column_sum @ column_sum)
    alpha = float(column_sum @ instance.rhs) / denom if denom > 0 else 1.0
    if not alpha > 0:
        alpha = 1.0
    return np.full(instance.cols, alpha)


# Networks

def _check_network(spec: NetworkSpec) -> None:
    if not spec.edges:
        raise EmptyInstance("network has no edges")
    if spec.supplies.shape[0] != spec.node_count:
        raise DimensionMismatch(f"{spec.supplies.shape[0]} supplies for {spec.node_count} nodes")
    for j, (tail, head, cost) in enumerate(spec.edges):
        if not (0 <= tail < spec.node_count and 0 <= head < spec.node_count):
            raise InvalidNetwork(f"edge {j} ({tail}->{head}) references a missing node")
        if tail == head:
            raise InvalidNetwork(f"edge {j} is a self-loop at node {tail}")
        if not cost > 0:
            raise NonPositiveCost(j, float(cost))
    total = float(np.sum(spec.supplies))
    if abs(total) > SUPPLY_BALANCE_TOLERANCE * max(1.0, float(np.sum(np.abs(spec.supplies)))):
        raise UnbalancedSupplies(total)


def incidence_matrix(spec: NetworkSpec) -> np.ndarray:
    """Signed node-edge incidence: +1 at the tail, -1 at the head."""
    m = np.zeros((spec.node_count, len(spec.edges)))
    for j, (tail, head, _) in enumerate(spec.edges):
        m[tail, j] = 1.0
        m[head, j] = -1.0
    return m


def build_transshipment(spec: NetworkSpec, grounded_node: Optional[int] = None) -> LpInstance:
    """Min-cost transshipment LP with the grounded node's row removed."""
    _check_network(spec)
    if grounded_node is None:
        grounded_node = spec.node_count - 1
    if not 0 <= grounded_node < spec.node_count:
        raise InvalidNetwork(f"grounded node {grounded_node} is not in 0..{spec.node_count - 1}")
    if spec.node_count < 2:
        raise EmptyInstance("a single-node network has no constraints left after grounding")

    keep = [v for v in range(spec.node_count) if v != grounded_node]
    a = incidence_matrix(spec)[keep, :]
    rank = numerical_rank(a)
    if rank < len(keep):
        raise DisconnectedGraph(rank, len(keep))

    return LpInstance(
        constraint_matrix=a,
        rhs=spec.supplies[keep],
        costs=[cost for _, _, cost in spec.edges],
        name=spec.name,
    )


# Files

def _parse_json(data: Union[bytes, str]) -> dict:
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, f"line {e.lineno} column {e.colno}") from e
    except UnicodeDecodeError as e:
        raise ParseError("file is not valid UTF-8") from e
    if not isinstance(raw, dict):
        raise ParseError("top-level JSON value must be an object")
    return raw


def _schema_validate(model, raw: dict, fields: dict):
    for key, field in fields.items():
        if key not in raw:
            raise SchemaError(field, f"missing key {key!r} ({field})")
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        err = e.errors()[0]
        location = ".".join(str(part) for part in err["loc"])
        raise ParseError(err["msg"], location) from e


def _instance_from_raw(raw: dict) -> LpInstance:
    parsed = _schema_validate(InstanceFile, raw, INSTANCE_FIELDS)
    if not parsed.A or not parsed.A[0]:
        raise EmptyInstance("constraint matrix is empty")
    width = len(parsed.A[0])
    for i, row in enumerate(parsed.A):
        if len(row) != width:
            raise ParseError(f"row has {len(row)} entries, expected {width}", f"A[{i}]")
    if len(parsed.b) != len(parsed.A):
        raise ParseError(f"{len(parsed.b)} entries for {len(parsed.A)} rows", "b")
    if len(parsed.c) != width:
        raise ParseError(f"{len(parsed.c)} entries for {width} columns", "c")
    return LpInstance(constraint_matrix=parsed.A, rhs=parsed.b, costs=parsed.c, name=parsed.name)


def _network_from_raw(raw: dict) -> Tuple[NetworkSpec, Optional[int]]:
    parsed = _schema_validate(NetworkFile, raw, NETWORK_FIELDS)
    if len(parsed.supplies) != parsed.nodes:
        raise ParseError(f"{len(parsed.supplies)} supplies for {parsed.nodes} nodes", "supplies")
    if parsed.nodes < 1:
        raise ParseError("node count must be positive", "nodes")
    spec = NetworkSpec(node_count=parsed.nodes, edges=parsed.edges, supplies=parsed.supplies, name=parsed.name)
    return spec, parsed.ground


def load(data: Union[bytes, str]) -> LpInstance:
    return _instance_from_raw(_parse_json(data))


def save(instance: LpInstance) -> bytes:
    document = InstanceFile(
        name=instance.name,
        A=instance.constraint_matrix.tolist(),
        b=instance.rhs.tolist(),
        c=instance.costs.tolist(),
    )
    return document.model_dump_json(indent=2, exclude_none=True).encode()


def load_network(data: Union[bytes, str]) -> Tuple[NetworkSpec, Optional[int]]:
    return _network_from_raw(_parse_json(data))


def save_network(spec: NetworkSpec, ground: Optional[int] = None) -> bytes:
    document = NetworkFile(
        name=spec.name,
        nodes=spec.node_count,
        edges=spec.edges,
        supplies=spec.supplies.tolist(),
        ground=ground,
    )
    return document.model_dump_json(indent=2, exclude_none=True).encode()


def load_any(data: Union[bytes, str]) -> LpInstance:
    """Load either file format; network files are grounded and converted."""
    raw = _parse_json(data)
    if "nodes" in raw:
        spec, ground = _network_from_raw(raw)
        logger.info(f"Building transshipment LP from network with {spec.node_count} nodes")
        return build_transshipment(spec, ground)
    return _instance_from_raw(raw)


# Random instances

def random_instance(rng: np.random.Generator, rows: int, cols: int,
                    name: Optional[str] = None) -> Tuple[LpInstance, np.ndarray]:
    """Gaussian A with b = A x̂ for an interior x̂; returns the instance and x̂."""
    if rows > cols:
        raise DimensionMismatch(f"{rows} rows cannot have full rank with {cols} columns")
    a = rng.standard_normal((rows, cols))
    interior = rng.uniform(0.5, 2.0, cols)
    instance = LpInstance(
        constraint_matrix=a,
        rhs=a @ interior,
        costs=rng.uniform(0.5, 3.0, cols),
        name=name,
    )
    return instance, interior


def random_simplex_instance(rng: np.random.Generator, cols: int,
                            name: Optional[str] = None) -> Tuple[LpInstance, np.ndarray]:
    instance = simplex_instance(rng.uniform(0.5, 3.0, cols), name=name)
    return instance, rng.dirichlet(np.ones(cols))


def random_network(rng: np.random.Generator, nodes: int, extra_edges: int,
                   name: Optional[str] = None) -> Tuple[NetworkSpec, np.ndarray]:
    """Directed path through a random node order plus random extra edges; unit flow end to end.

    Also returns a strictly positive feasible flow: every extra edge carries a small
    amount δ, rerouted along the path so that conservation holds at every node.
    """
    if nodes < 2:
        raise InvalidNetwork("a network needs at least two nodes")
    order = rng.permutation(nodes)
    position = np.empty(nodes, dtype=int)
    position[order] = np.arange(nodes)
    edges = [(int(order[i]), int(order[i + 1]), float(rng.uniform(0.5, 3.0))) for i in range(nodes - 1)]
    while len(edges) < nodes - 1 + extra_edges:
        tail, head = rng.choice(nodes, size=2, replace=False)
        edges.append((int(tail), int(head), float(rng.uniform(0.5, 3.0))))
    supplies = np.zeros(nodes)
    supplies[order[0]] = 1.0
    supplies[order[-1]] = -1.0

    delta = 1.0 / (2.0 * (extra_edges + 1))
    flow = np.ones(len(edges))
    flow[nodes - 1:] = delta
    for tail, head, _ in edges[nodes - 1:]:
        lo, hi = sorted((position[tail], position[head]))
        # a forward shortcut takes δ off the path segment it skips, a backward edge closes a cycle
        flow[lo:hi] += -delta if position[tail] < position[head] else delta
    return NetworkSpec(node_count=nodes, edges=edges, supplies=supplies, name=name), flow
