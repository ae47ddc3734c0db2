from pydantic import BaseModel, ConfigDict, Field, BeforeValidator, PlainSerializer, field_validator
from typing import Annotated, Dict, List, Literal, Optional, Tuple
import numpy as np

from . import config


def _readonly_array(value, ndim: int) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-dimensional array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


# numpy arrays stored read-only, serialized as nested lists
Vector = Annotated[
    np.ndarray,
    BeforeValidator(lambda v: _readonly_array(v, 1)),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]
Matrix = Annotated[
    np.ndarray,
    BeforeValidator(lambda v: _readonly_array(v, 2)),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]


class ArrayModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# Instances

class LpInstance(ArrayModel):
    """min cᵀx s.t. Ax = b, x ≥ 0, with rows N and columns E."""
    constraint_matrix: Matrix
    rhs: Vector
    costs: Vector
    name: Optional[str] = None

    @property
    def rows(self) -> int:
        return self.constraint_matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.constraint_matrix.shape[1]


class ValidatedInstance(ArrayModel):
    instance: LpInstance
    rank: int


class NetworkSpec(ArrayModel):
    node_count: int = Field(ge=1)
    edges: List[Tuple[int, int, float]]
    supplies: Vector
    name: Optional[str] = None


class InstanceFile(BaseModel):
    """On-disk LP instance format."""
    name: Optional[str] = None
    A: List[List[float]]
    b: List[float]
    c: List[float]


class NetworkFile(BaseModel):
    """On-disk network format."""
    name: Optional[str] = None
    nodes: int
    edges: List[Tuple[int, int, float]]
    supplies: List[float]
    ground: Optional[int] = None


# Linear algebra and dynamics

class SpdFactorization(ArrayModel):
    factor: Matrix
    dimension: int
    regularization_applied: float = 0.0


class PhysarumState(ArrayModel):
    x: Vector
    t: float = Field(0.0, ge=0.0)

    @field_validator("x")
    @classmethod
    def x_positive(cls, x: np.ndarray) -> np.ndarray:
        if not np.all(x > 0):
            raise ValueError("state x must be strictly positive")
        return x


class DerivedQuantities(ArrayModel):
    conductances: Vector
    resistances: Vector
    laplacian_factorization: SpdFactorization
    potentials: Vector
    flow: Vector
    energy: float


class ThomsonComparison(BaseModel):
    candidate_energy: float
    electrical_energy: float
    gap: float


# Integration

class IntegrationConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: Literal["euler", "rk4"] = "rk4"
    initial_step: float = Field(1e-2, gt=0)
    max_time: float = Field(30.0, gt=0)
    positivity_floor_ratio: float = Field(0.5, gt=0, lt=1)
    adaptive: bool = True
    rtol: float = Field(1e-6, gt=0)
    trace_interval: float = Field(0.1, gt=0)
    stop_when_stationary: bool = True

    @field_validator("method", mode="before")
    @classmethod
    def normalize_method(cls, value):
        return "euler" if value == "explicit-euler" else value

    @classmethod
    def from_env(cls, **overrides) -> "IntegrationConfig":
        values = dict(
            method=config.METHOD,
            initial_step=config.INITIAL_STEP,
            max_time=config.MAX_TIME,
            trace_interval=config.TRACE_INTERVAL,
            rtol=config.RTOL,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class TraceRecord(ArrayModel):
    t: float
    x: Vector
    cost: float
    energy: float
    infeasibility: float
    kl: Optional[float] = None
    potential: Optional[float] = None


class IntegratorStats(BaseModel):
    steps: int = 0
    rejections: int = 0
    regularizations: int = 0


class TrajectoryTrace(ArrayModel):
    records: List[TraceRecord]
    stats: IntegratorStats
    converged: bool
    termination: Literal["max_time", "stationary"]

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]


# Diagnostics

class DiagnosticRecord(ArrayModel):
    t: float
    cost: float
    energy: float
    infeasibility: float
    xi: Vector
    kl: float
    potential: float
    energy_cost_ratio: float


class RateReport(BaseModel):
    """Exact time derivatives at a point, next to the bounds they obey."""
    dlog_cost: float
    dlog_cost_bound: float
    dcross_entropy: float
    dcross_entropy_identity: float
    dkl: float
    dkl_bound: float
    dpotential: float


class LemmaViolation(BaseModel):
    check: str
    t: float
    observed: float
    bound: float


class LemmaReport(BaseModel):
    violations: List[LemmaViolation] = []
    segments_tested: Dict[str, int] = {}
    notes: List[str] = []

    @property
    def passed(self) -> bool:
        return not self.violations


class OracleSolution(ArrayModel):
    opt: float
    x_star: Vector
    all_optimal_vertices: List[Vector]
    chosen_rule: Literal["lexicographic-min"] = "lexicographic-min"
    vertex_count: int = 0


# Mirror descent

class DualState(ArrayModel):
    y: Vector
    t: float = 0.0


class MdComparison(BaseModel):
    max_deviation: float
    times: List[float]
    deviations: List[float]
    lyapunov: Optional[List[float]] = None


# Command-line reports

class RunSummary(BaseModel):
    instance_name: str
    final_t: float
    final_cost: float
    opt: Optional[float] = None
    relative_gap: Optional[float] = None
    eps: float
    bound_time_kl: Optional[float] = None
    bound_time_mu: Optional[float] = None
    achieved_time: Optional[float] = None
    converged: bool
    integrator_stats: IntegratorStats


class BoundCheck(BaseModel):
    eps: float
    bound_time_kl: float
    bound_time_mu: float
    final_cost: float
    opt: float
    achieved_time: Optional[float] = None
    achieved_over_bound: Optional[float] = None
    passed: bool
