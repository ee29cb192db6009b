"""Dense symmetric linear algebra used throughout the fitting code.

Everything goes through a single Cholesky routine so positive definiteness
is detected in one place and the error contract is uniform.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import InputShapeError, NotPositiveDefiniteError

SYMMETRY_TOL = 1e-10


def _check_symmetric(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputShapeError(f"expected square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise InputShapeError("matrix is not symmetric within tolerance")
    return a


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular factor L with L L^T = a.

    Raises NotPositiveDefiniteError when a pivot falls at or below
    1e-12 times the largest diagonal entry (the definitive not-PD signal).
    """
    a = _check_symmetric(a)
    try:
        L = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    floor = 1e-12 * max(float(np.max(np.diag(a))), 0.0)
    if np.min(np.diag(L)) ** 2 <= floor:
        raise NotPositiveDefiniteError("pivot below positive-definiteness floor")
    return np.ascontiguousarray(L)


def is_pd(a: np.ndarray) -> bool:
    try:
        cholesky(a)
        return True
    except (NotPositiveDefiniteError, InputShapeError):
        return False


def log_det_pd(a: np.ndarray) -> float:
    L = cholesky(a)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def solve_pd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for symmetric positive-definite a via its Cholesky factor."""
    L = cholesky(a)
    y = scipy.linalg.solve_triangular(L, b, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(L.T, y, lower=False, check_finite=False)


def pd_inverse(a: np.ndarray) -> np.ndarray:
    inv = solve_pd(a, np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


def chol_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b given a precomputed lower factor."""
    y = scipy.linalg.solve_triangular(L, b, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(L.T, y, lower=False, check_finite=False)
