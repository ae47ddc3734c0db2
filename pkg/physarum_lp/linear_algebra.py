"""Dense SPD factorization and solves for the Laplacian system L p = b."""
import logging

import numpy as np
from scipy import linalg

from .errors import AsymmetricInput, DimensionMismatch, NotPositiveDefinite
from .models import SpdFactorization

logger = logging.getLogger(__name__)

ASYMMETRY_TOLERANCE = 1e-12
PIVOT_RATIO = 1e-14
REGULARIZATION_RATIO = 1e-12
RANK_TOLERANCE = 1e-10


def _cholesky(matrix: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, or None when a pivot fails."""
    try:
        return linalg.cholesky(matrix, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None


def _pivots_ok(factor: np.ndarray, max_diag: float) -> bool:
    return factor is not None and np.min(np.diag(factor)) ** 2 >= PIVOT_RATIO * max_diag


def spd_factorize(matrix: np.ndarray) -> SpdFactorization:
    """Cholesky factorization with one regularized retry on a weak pivot."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")

    scale = np.max(np.abs(m))
    if np.max(np.abs(m - m.T)) > ASYMMETRY_TOLERANCE * scale:
        raise AsymmetricInput(f"relative asymmetry {np.max(np.abs(m - m.T)) / scale:.3e}")

    max_diag = float(np.max(np.diag(m)))
    if max_diag <= 0:
        raise NotPositiveDefinite("largest diagonal entry is not positive")

    factor = _cholesky(m)
    if _pivots_ok(factor, max_diag):
        return SpdFactorization(factor=factor, dimension=m.shape[0])

    delta = REGULARIZATION_RATIO * max_diag
    logger.debug(f"Weak Cholesky pivot, retrying with regularization {delta:.3e}")
    factor = _cholesky(m + delta * np.eye(m.shape[0]))
    if not _pivots_ok(factor, max_diag):
        raise NotPositiveDefinite("pivot failure persists after regularization")
    return SpdFactorization(factor=factor, dimension=m.shape[0], regularization_applied=delta)


def spd_solve(factorization: SpdFactorization, rhs: np.ndarray) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != factorization.dimension:
        raise DimensionMismatch(
            f"right-hand side has length {rhs.shape[0]}, factorization has dimension {factorization.dimension}"
        )
    return linalg.cho_solve((factorization.factor, True), rhs, check_finite=False)


def numerical_rank(matrix: np.ndarray, tolerance: float = RANK_TOLERANCE) -> int:
    """Rank from a column-pivoted QR, relative to the largest |R_ii|."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        return 0
    _, r, _ = linalg.qr(m, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0:
        return 0
    return int(np.sum(diag > tolerance * diag[0]))
