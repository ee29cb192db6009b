"""Orthant-truncated Gaussian sampling for the latent binary coordinates.

The conditional posterior of the unobserved binary block given the observed
continuous block is Gaussian; draws from its orthant truncation come from
elliptical slice sampling with analytically intersected feasible arcs, so a
step never rejects. Chains are seeded per observation, which makes the
output independent of any execution schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend, linalg
from ._purepy import constraint_arcs
from .errors import ConditioningError, InputShapeError, NotPositiveDefiniteError, ParameterError
from .types import Dataset, LatentDraws, ModelState

DEFAULT_BURN_IN = 50
DEFAULT_THIN = 1


@dataclass(frozen=True)
class OrthantConstraint:
    """Coordinate sign requirements: sign s_k means s_k * z_k >= 0."""

    signs: np.ndarray

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=np.float64)
        if not np.all(np.isin(signs, (-1.0, 1.0))):
            raise ParameterError("orthant signs must be +1 or -1")
        signs.setflags(write=False)
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_binary_outcomes(cls, y_binary) -> "OrthantConstraint":
        y = np.asarray(y_binary, dtype=np.float64)
        return cls(signs=np.where(y == 1.0, 1.0, -1.0))

    def satisfied(self, z: np.ndarray) -> bool:
        return bool(np.all(self.signs * np.asarray(z) >= 0.0))


@dataclass(frozen=True)
class ConditionalGaussian:
    """Gaussian given by its mean and precision matrix."""

    mean: np.ndarray
    precision: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        prec = np.asarray(self.precision, dtype=np.float64)
        if mean.ndim != 1 or prec.shape != (mean.size, mean.size):
            raise InputShapeError("mean and precision shapes disagree")
        if not np.all(np.isfinite(mean)):
            raise ConditioningError("conditional mean is not finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "precision", prec)

    def covariance_chol(self) -> np.ndarray:
        """Lower Cholesky factor of the covariance (inverse precision)."""
        if "chol" not in self._cache:
            try:
                cov = linalg.pd_inverse(self.precision)
                self._cache["chol"] = linalg.cholesky(cov)
            except NotPositiveDefiniteError as exc:
                raise ConditioningError(f"conditional precision not PD: {exc}") from None
        return self._cache["chol"]


def conditional_of_binary_block(m: np.ndarray, omega: np.ndarray, y_c: np.ndarray) -> ConditionalGaussian:
    """Conditional law of the binary latent block given the continuous block.

    With the precision partitioned conformably, the conditional precision is
    the binary diagonal block and the mean shifts by -Omega_BB^{-1} Omega_BC
    times the continuous residual.
    """
    m = np.asarray(m, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    y_c = np.asarray(y_c, dtype=np.float64)
    q = m.size
    q_c = y_c.size
    if omega.shape != (q, q) or q_c > q:
        raise InputShapeError("mean, precision, and continuous block disagree on sizes")
    omega_bb = omega[q_c:, q_c:]
    omega_bc = omega[q_c:, :q_c]
    resid = y_c - m[:q_c]
    try:
        shift = linalg.solve_pd(omega_bb, omega_bc @ resid) if q_c else np.zeros(q - q_c)
    except NotPositiveDefiniteError as exc:
        raise ConditioningError(f"binary precision block not PD: {exc}") from None
    return ConditionalGaussian(mean=m[q_c:] - shift, precision=omega_bb)


def ellipse_arc_intersection(center: float, amp_cos: float, amp_sin: float, sign: int):
    """Exact angle set where sign*(amp_cos*cos(t) + amp_sin*sin(t) + center) >= 0.

    Returns a sorted list of at most two closed arcs within [0, 2*pi); the
    degenerate zero-amplitude case yields the full circle or the empty set
    according to the sign of the offset.
    """
    return constraint_arcs(float(center), float(amp_cos), float(amp_sin), float(sign))


def liness_step(current: np.ndarray, g: ConditionalGaussian, c: OrthantConstraint, rng) -> np.ndarray:
    """One elliptical-slice transition on the orthant-truncated Gaussian.

    The feasible angle set always contains the current point, so the step
    cannot fail; a numerically empty arc set falls back to returning the
    current point unchanged.
    """
    z = np.array(current, dtype=np.float64)
    qb = z.size
    eps = rng.standard_normal((1, qb))
    u = rng.random(1)
    out = np.empty((1, qb))
    _backend.liness_chain(z, g.mean, g.covariance_chol(), c.signs, eps, u, 0, 1, 1, out)
    return out[0]


def observation_seed(seed_ctx, i: int) -> np.random.SeedSequence:
    """Deterministic per-observation seed, independent of execution order."""
    return np.random.SeedSequence(tuple(int(s) for s in seed_ctx) + (int(i),))


def sample_latents(
    dataset: Dataset,
    state: ModelState,
    H: int,
    seed_ctx=(0,),
    burn_in: int = DEFAULT_BURN_IN,
    thin: int = DEFAULT_THIN,
) -> LatentDraws:
    """Draw H completions of the latent matrix from the conditional posterior.

    Continuous coordinates are copied from Y; binary coordinates are sampled
    with a per-observation slice-sampling chain (burn_in discarded, every
    thin-th state kept). With no binary outcomes the single exact completion
    Z = Y is returned and no randomness is consumed.
    """
    if H < 1:
        raise ParameterError("H must be >= 1")
    if burn_in < 0 or thin < 1:
        raise ParameterError("need burn_in >= 0 and thin >= 1")
    n, q = dataset.n, dataset.q
    q_c = dataset.q_continuous
    q_b = dataset.q_binary
    if q_b == 0:
        return LatentDraws(draws=dataset.Y[None, :, :].copy(), seed_lineage=())

    fitted = dataset.X @ state.B
    omega_bb = state.Omega[q_c:, q_c:]
    omega_bc = state.Omega[q_c:, :q_c]
    try:
        cov = linalg.pd_inverse(omega_bb)
        cov_chol = linalg.cholesky(cov)
        if q_c:
            shift = linalg.solve_pd(omega_bb, omega_bc @ (dataset.Y[:, :q_c] - fitted[:, :q_c]).T).T
        else:
            shift = np.zeros((n, q_b))
    except NotPositiveDefiniteError as exc:
        raise ConditioningError(f"binary precision block not PD: {exc}") from None
    cond_means = fitted[:, q_c:] - shift

    y_b = dataset.Y[:, q_c:]
    signs_all = np.where(y_b == 1.0, 1.0, -1.0)
    total_steps = burn_in + H * thin

    draws = np.empty((H, n, q))
    draws[:, :, :q_c] = dataset.Y[None, :, :q_c]
    total_fallbacks = 0
    lineage = []
    for i in range(n):
        seq = observation_seed(seed_ctx, i)
        lineage.append(tuple(seq.entropy))
        rng = np.random.Generator(np.random.PCG64(seq))
        eps = rng.standard_normal((total_steps, q_b))
        u = rng.random(total_steps)
        z = np.ascontiguousarray(np.where(y_b[i] == 1.0, 0.5, -0.5))
        out = np.empty((H, q_b))
        total_fallbacks += _backend.liness_chain(
            z, np.ascontiguousarray(cond_means[i]), cov_chol,
            np.ascontiguousarray(signs_all[i]), eps, u, burn_in, H, thin, out
        )
        draws[:, i, q_c:] = out
    return LatentDraws(draws=draws, seed_lineage=tuple(lineage), fallback_count=total_fallbacks)
