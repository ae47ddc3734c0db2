"""Exception hierarchy shared by every module of the package."""
from typing import Optional

import numpy as np


class PhysarumError(Exception):
    """Base class for all errors raised by physarum_lp."""


# Instance construction and validation

class InstanceError(PhysarumError, ValueError):
    """Raised when an LP instance or one of its inputs is unusable."""


class EmptyInstance(InstanceError):
    pass


class DimensionMismatch(InstanceError):
    pass


class NonPositiveCost(InstanceError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"costs[{index}] = {value!r} is not strictly positive")


class RankDeficient(InstanceError):
    def __init__(self, rank: int, rows: int):
        self.rank = rank
        self.rows = rows
        super().__init__(f"constraint matrix has numerical rank {rank}, expected {rows}")


class ZeroRhs(InstanceError):
    pass


class UnbalancedSupplies(InstanceError):
    def __init__(self, total: float):
        self.total = total
        super().__init__(f"supplies sum to {total!r}, expected 0")


class DisconnectedGraph(InstanceError):
    def __init__(self, rank: int, rows: int):
        self.rank = rank
        self.rows = rows
        super().__init__(f"grounded incidence matrix has rank {rank} < {rows}: graph is not connected")


class InvalidNetwork(InstanceError):
    pass


class ParseError(InstanceError):
    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class SchemaError(InstanceError):
    def __init__(self, field: str, message: Optional[str] = None):
        self.field = field
        super().__init__(message or f"missing or invalid field {field!r}")


class NotSimplexInstance(InstanceError):
    pass


class InfeasibleStart(InstanceError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"initial point is infeasible: ||Ax0 - b|| = {residual:.3e}")


class InfeasibleCandidate(InstanceError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"candidate flow violates Af = b: residual {residual:.3e}")


# Numerical linear algebra

class NumericalError(PhysarumError, ArithmeticError):
    pass


class AsymmetricInput(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class SingularLaplacian(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


# Integration

class IntegrationError(PhysarumError):
    pass


class PositivityViolation(IntegrationError):
    def __init__(self, index: int, stage: int):
        self.index = index
        self.stage = stage
        super().__init__(f"x[{index}] is not positive at stage {stage}")


class StepCollapse(IntegrationError):
    def __init__(self, t: float, x: np.ndarray):
        self.t = t
        self.x = np.array(x, copy=True)
        super().__init__(f"step size collapsed at t = {t:.6g} (min x = {float(np.min(x)):.3e})")


# Diagnostics

class DiagnosticError(PhysarumError, ValueError):
    pass


class ZeroCost(DiagnosticError):
    pass


class NotNormalized(DiagnosticError):
    def __init__(self, total: float):
        self.total = total
        super().__init__(f"distribution sums to {total!r}, expected 1")


class AbsoluteContinuityViolation(DiagnosticError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"reference mass at index {index} but none in the compared distribution")


class NonPositivePrimal(DiagnosticError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"x[{index}] must be strictly positive")


# Oracle

class OracleError(PhysarumError):
    pass


class Infeasible(OracleError):
    pass


class TooLarge(OracleError):
    def __init__(self, size: int, limit: int, unit: str = "candidate bases"):
        self.size = size
        self.limit = limit
        self.unit = unit
        super().__init__(f"{size} {unit} exceed the enumeration limit of {limit}")
