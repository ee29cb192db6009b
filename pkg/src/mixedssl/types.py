"""Shared domain types, the deterministic observation link, and input validation.

Internally, outcome columns are kept in canonical order (continuous first,
then binary); the permutation back to the user's column order is stored on
the Dataset so file IO can round-trip the original layout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataValidationError,
    DegenerateCovariateError,
    InputShapeError,
    ParameterError,
)
from . import linalg

STANDARDIZE_TOL = 1e-8
OMEGA_SYMMETRY_TOL = 1e-10
BINARY_UNIT_VARIANCE_TOL = 1e-6
MIX_CLIP = 1e-8


class OutcomeKind(enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


def parse_kinds(names) -> list[OutcomeKind]:
    out = []
    for name in names:
        try:
            out.append(OutcomeKind(str(name).strip().lower()))
        except ValueError:
            raise ParameterError(
                f"unknown outcome kind {name!r}; expected 'continuous' or 'binary'"
            ) from None
    return out


def canonical_order(kinds) -> np.ndarray:
    """Permutation placing continuous columns first (stable within each block).

    Entry c of the result is the user-order index stored at canonical slot c.
    """
    kinds = list(kinds)
    cont = [i for i, k in enumerate(kinds) if k == OutcomeKind.CONTINUOUS]
    return np.array(cont + [i for i in range(len(kinds)) if i not in cont], dtype=np.intp)


def apply_link(z: np.ndarray, kinds) -> np.ndarray:
    """Deterministic observation map: identity on continuous coordinates,
    1{z >= 0} on binary coordinates.

    Operates on a vector or on the rows of a matrix.
    """
    z = np.asarray(z, dtype=np.float64)
    kinds = list(kinds)
    if z.shape[-1] != len(kinds):
        raise InputShapeError(
            f"latent vector has {z.shape[-1]} coordinates but {len(kinds)} kinds given"
        )
    out = z.copy()
    binary = np.array([k == OutcomeKind.BINARY for k in kinds])
    out[..., binary] = (z[..., binary] >= 0.0).astype(np.float64)
    return out


def standardize(x_raw: np.ndarray):
    """Center each column and rescale it to Euclidean norm sqrt(n).

    Returns (x, centers, scales) with x = (x_raw - centers) / scales.
    """
    x_raw = np.asarray(x_raw, dtype=np.float64)
    if x_raw.ndim != 2:
        raise InputShapeError(f"covariate matrix must be 2-D, got shape {x_raw.shape}")
    n = x_raw.shape[0]
    centers = x_raw.mean(axis=0)
    centered = x_raw - centers
    norms = np.linalg.norm(centered, axis=0)
    bad = np.flatnonzero(norms <= 1e-300)
    if bad.size:
        raise DegenerateCovariateError(int(bad[0]))
    scales = norms / np.sqrt(n)
    return centered / scales, centers, scales


def unstandardize(x: np.ndarray, centers: np.ndarray, scales: np.ndarray) -> np.ndarray:
    return x * scales + centers


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.message}"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Standardized covariates and canonically ordered outcomes.

    X is n x p with mean-zero, norm-sqrt(n) columns; Y is n x q with the
    continuous columns first. ``user_to_canonical[c]`` gives the user-order
    column held at canonical slot c.
    """

    X: np.ndarray
    Y: np.ndarray
    kinds: tuple
    user_to_canonical: np.ndarray
    centers: np.ndarray
    scales: np.ndarray
    _gram: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Y.shape[1]

    @property
    def q_continuous(self) -> int:
        return sum(1 for k in self.kinds if k == OutcomeKind.CONTINUOUS)

    @property
    def q_binary(self) -> int:
        return self.q - self.q_continuous

    @property
    def binary_mask(self) -> np.ndarray:
        return np.array([k == OutcomeKind.BINARY for k in self.kinds])

    def gram(self) -> np.ndarray:
        """X^T X, cached. Used by the coordinate-descent residual updates."""
        if "G" not in self._gram:
            g = self.X.T @ self.X
            g.setflags(write=False)
            self._gram["G"] = g
        return self._gram["G"]

    @classmethod
    def from_raw(cls, x_raw, y_raw, kinds, standardize_x: bool = True) -> "Dataset":
        x_raw = np.asarray(x_raw, dtype=np.float64)
        y_raw = np.asarray(y_raw, dtype=np.float64)
        kinds = list(kinds)
        if y_raw.ndim != 2:
            raise InputShapeError(f"outcome matrix must be 2-D, got shape {y_raw.shape}")
        if len(kinds) != y_raw.shape[1]:
            raise InputShapeError(
                f"{len(kinds)} outcome kinds for {y_raw.shape[1]} outcome columns"
            )
        if standardize_x:
            x, centers, scales = standardize(x_raw)
        else:
            x = x_raw.copy()
            centers = np.zeros(x.shape[1])
            scales = np.ones(x.shape[1])
        perm = canonical_order(kinds)
        y = y_raw[:, perm]
        kinds_canon = tuple(kinds[i] for i in perm)
        ds = cls(
            X=_freeze(x),
            Y=_freeze(y),
            kinds=kinds_canon,
            user_to_canonical=perm,
            centers=_freeze(centers),
            scales=_freeze(scales),
        )
        violations = validate_dataset(ds)
        if violations:
            raise DataValidationError(violations)
        return ds

    def to_user_columns(self, mat: np.ndarray) -> np.ndarray:
        """Reorder the columns of a (.. x q) array from canonical to user order."""
        inv = np.empty_like(self.user_to_canonical)
        inv[self.user_to_canonical] = np.arange(self.q)
        return np.asarray(mat)[..., inv]

    def kinds_user_order(self) -> list[OutcomeKind]:
        inv = np.empty_like(self.user_to_canonical)
        inv[self.user_to_canonical] = np.arange(self.q)
        return [self.kinds[i] for i in inv]


def validate_dataset(ds: Dataset) -> list[Violation]:
    """Check every Dataset invariant; returns an empty list on success."""
    violations: list[Violation] = []
    X, Y = ds.X, ds.Y
    n = X.shape[0]
    if X.ndim != 2 or Y.ndim != 2:
        violations.append(Violation("shape", "X and Y must be 2-D"))
        return violations
    if Y.shape[0] != n:
        violations.append(
            Violation("shape", f"X has {n} rows but Y has {Y.shape[0]} rows")
        )
    if n < 2:
        violations.append(Violation("size", f"need n >= 2 observations, got {n}"))
    if X.shape[1] < 1:
        violations.append(Violation("size", "need p >= 1 covariates"))
    if Y.shape[1] < 1:
        violations.append(Violation("size", "need q >= 1 outcomes"))
    if len(ds.kinds) != Y.shape[1]:
        violations.append(
            Violation("shape", f"{len(ds.kinds)} kinds for {Y.shape[1]} outcomes")
        )
        return violations
    if not np.all(np.isfinite(X)):
        i, j = np.argwhere(~np.isfinite(X))[0]
        violations.append(Violation("nonfinite", f"non-finite value in X at ({i},{j})"))
    if not np.all(np.isfinite(Y)):
        i, j = np.argwhere(~np.isfinite(Y))[0]
        violations.append(Violation("nonfinite", f"non-finite value in Y at ({i},{j})"))
    else:
        for k, kind in enumerate(ds.kinds):
            if kind != OutcomeKind.BINARY:
                continue
            col = Y[:, k]
            bad = np.flatnonzero((col != 0.0) & (col != 1.0))
            if bad.size:
                violations.append(
                    Violation(
                        "binary",
                        f"non-binary value at ({int(bad[0])},{k}): {col[bad[0]]!r}",
                    )
                )
    # kinds must be canonically ordered: no continuous column after a binary one
    seen_binary = False
    for k, kind in enumerate(ds.kinds):
        if kind == OutcomeKind.BINARY:
            seen_binary = True
        elif seen_binary:
            violations.append(
                Violation("order", f"continuous column at canonical slot {k} follows binary")
            )
            break
    if np.all(np.isfinite(X)) and n >= 2:
        if np.max(np.abs(X.mean(axis=0))) > STANDARDIZE_TOL:
            violations.append(Violation("standardize", "X columns are not mean zero"))
        norms = np.linalg.norm(X, axis=0)
        if np.max(np.abs(norms - np.sqrt(n))) > STANDARDIZE_TOL * np.sqrt(n):
            violations.append(Violation("standardize", "X columns do not have norm sqrt(n)"))
    return violations


@dataclass(frozen=True)
class ModelState:
    """Current iterate: coefficients, latent precision, and mixing weights."""

    B: np.ndarray
    Omega: np.ndarray
    theta: float
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "B", _freeze(self.B))
        object.__setattr__(self, "Omega", _freeze(self.Omega))

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @property
    def q(self) -> int:
        return self.B.shape[1]

    def validate(self, kinds=None, require_unit_binary: bool = True) -> list[Violation]:
        violations: list[Violation] = []
        om = self.Omega
        scale = max(1.0, float(np.max(np.abs(om))))
        if np.max(np.abs(om - om.T)) > OMEGA_SYMMETRY_TOL * scale:
            violations.append(Violation("omega", "Omega is not symmetric"))
        if not linalg.is_pd(om):
            violations.append(Violation("omega", "Omega is not positive definite"))
        elif kinds is not None and require_unit_binary:
            sigma = linalg.pd_inverse(om)
            for k, kind in enumerate(kinds):
                if kind == OutcomeKind.BINARY and abs(sigma[k, k] - 1.0) > BINARY_UNIT_VARIANCE_TOL:
                    violations.append(
                        Violation(
                            "identifiability",
                            f"latent variance of binary outcome {k} is {sigma[k, k]:.8f}",
                        )
                    )
        if not (0.0 < self.theta < 1.0):
            violations.append(Violation("mixing", f"theta={self.theta} outside (0,1)"))
        if not (0.0 < self.eta < 1.0):
            violations.append(Violation("mixing", f"eta={self.eta} outside (0,1)"))
        if self.B.shape[1] != om.shape[0]:
            violations.append(Violation("shape", "B and Omega disagree on q"))
        return violations


@dataclass(frozen=True)
class Hyperparameters:
    """Penalty rates, Beta-prior shapes, Monte Carlo size, and grids."""

    lambda1: float
    lambda0: float
    xi1: float
    xi0: float
    a_theta: float = 1.0
    b_theta: float = 1.0
    a_eta: float = 1.0
    b_eta: float = 1.0
    H: int = 2000
    lambda0_grid: tuple = ()
    xi0_grid: tuple = ()
    max_iter: int = 100
    tol: float = 1e-4

    def __post_init__(self):
        for name in ("lambda1", "lambda0", "xi1", "xi0"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        for name in ("a_theta", "b_theta", "a_eta", "b_eta"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        # equality allowed: lambda0 == lambda1 is the single-Laplace limit
        if self.lambda1 > self.lambda0:
            raise ParameterError("require lambda1 <= lambda0")
        if self.xi1 > self.xi0:
            raise ParameterError("require xi1 <= xi0")
        if self.H < 1:
            raise ParameterError("H must be a positive integer")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be a positive integer")
        if self.tol <= 0:
            raise ParameterError("tol must be positive")
        for name in ("lambda0_grid", "xi0_grid"):
            grid = tuple(float(g) for g in getattr(self, name))
            object.__setattr__(self, name, grid)
            if grid:
                if any(g <= 0 for g in grid):
                    raise ParameterError(f"{name} entries must be positive")
                if any(b <= a for a, b in zip(grid, grid[1:])):
                    raise ParameterError(f"{name} must be strictly increasing")
        if self.lambda0_grid and self.lambda1 > min(self.lambda0_grid):
            raise ParameterError("lambda1 must not exceed min(lambda0_grid)")
        if self.xi0_grid and self.xi1 > min(self.xi0_grid):
            raise ParameterError("xi1 must not exceed min(xi0_grid)")


@dataclass(frozen=True)
class LatentDraws:
    """Monte Carlo completions of the latent matrix: draws has shape (H, n, q).

    Continuous coordinates equal the observed outcomes in every draw; binary
    coordinates satisfy their orthant signs exactly.
    """

    draws: np.ndarray
    seed_lineage: tuple = ()
    fallback_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "draws", _freeze(self.draws))

    @property
    def H(self) -> int:
        return self.draws.shape[0]

    def mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)

    def rescale_columns(self, factors: np.ndarray) -> "LatentDraws":
        """Multiply latent column k by factors[k] in every draw."""
        return LatentDraws(
            draws=self.draws * np.asarray(factors)[None, None, :],
            seed_lineage=self.seed_lineage,
            fallback_count=self.fallback_count,
        )
