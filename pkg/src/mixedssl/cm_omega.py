"""CM Step 2: element-wise penalized precision estimation, the closed-form
update of the precision slab weight, and the identifiability rescaling that
pins the latent residual variance of every binary outcome at one.

The precision solve is coordinate descent over single entries. Each 1-D
subproblem has a closed-form feasible interval (where the updated matrix
stays positive definite), and the exact minimizer is found inside it, so no
iterate can leave the cone. The inverse is maintained by rank-one/rank-two
updates within a sweep and recomputed from a Cholesky factorization at sweep
boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConditioningError, InputShapeError, NotPositiveDefiniteError, ParameterError
from .types import LatentDraws, ModelState, OutcomeKind, MIX_CLIP

_FEASIBLE_MARGIN = 1e-12
_DEFAULT_SWEEPS = 500


@dataclass(frozen=True)
class PenalizedGLassoProblem:
    """Data for the precision update: maximize
    (n/2) logdet(Omega) - (1/2) tr(S Omega) - xi1 sum_k omega_kk
    - sum_{k<l} xi_star_kl |omega_kl|.
    """

    S: np.ndarray
    n: int
    xi1: float
    xi_star: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=np.float64)
        xi = np.asarray(self.xi_star, dtype=np.float64)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or xi.shape != S.shape:
            raise InputShapeError("S and xi_star must be square matrices of equal size")
        if self.xi1 <= 0:
            raise ParameterError("xi1 must be positive")
        object.__setattr__(self, "S", 0.5 * (S + S.T))
        object.__setattr__(self, "xi_star", xi)

    @property
    def q(self) -> int:
        return self.S.shape[0]


def glasso_objective(problem: PenalizedGLassoProblem, omega: np.ndarray) -> float:
    val = 0.5 * problem.n * linalg.log_det_pd(omega)
    val -= 0.5 * float(np.sum(problem.S * omega))
    val -= problem.xi1 * float(np.trace(omega))
    iu = np.triu_indices(problem.q, k=1)
    val -= float(np.sum(problem.xi_star[iu] * np.abs(omega[iu])))
    return val


def kkt_violation(problem: PenalizedGLassoProblem, omega: np.ndarray) -> float:
    """Largest violation of the stationarity conditions at omega.

    With A = Omega^{-1}: diagonals need (n/2) A_kk - S_kk/2 = xi1; a nonzero
    off-diagonal pair needs n A_kl - S_kl = xi_star_kl sign(omega_kl); a zero
    pair needs |n A_kl - S_kl| <= xi_star_kl.
    """
    A = linalg.pd_inverse(omega)
    q = problem.q
    worst = 0.0
    for k in range(q):
        worst = max(worst, abs(0.5 * problem.n * A[k, k] - 0.5 * problem.S[k, k] - problem.xi1))
        for l in range(k + 1, q):
            grad = problem.n * A[k, l] - problem.S[k, l]
            xi = problem.xi_star[k, l]
            if omega[k, l] != 0.0:
                worst = max(worst, abs(grad - xi * math.copysign(1.0, omega[k, l])))
            else:
                worst = max(worst, max(abs(grad) - xi, 0.0))
    return worst


def _offdiag_step(s_kl, xi, w, a_kk, a_ll, a_kl, n):
    """Exact 1-D maximizer step t for one symmetric off-diagonal pair.

    Maximizes (n/2) log Q(t) - s_kl t - xi |w + t| with
    Q(t) = (1 + t a_kl)^2 - t^2 a_kk a_ll over the feasible interval where
    Q > 0. Returns exactly -w when the subgradient condition holds there.
    """
    a2 = a_kl * a_kl - a_kk * a_ll  # negative by positive definiteness
    root = math.sqrt(a_kk * a_ll)
    r1 = (-a_kl + root) / a2
    r2 = (-a_kl - root) / a2
    t_lo, t_hi = (r1, r2) if r1 < r2 else (r2, r1)
    margin = _FEASIBLE_MARGIN * (t_hi - t_lo)
    t_lo += margin
    t_hi -= margin

    def phi(t):
        qv = (1.0 + t * a_kl) ** 2 - t * t * a_kk * a_ll
        return 0.5 * n * (2.0 * a_kl + 2.0 * a2 * t) / qv - s_kl

    t0 = -w
    if t_lo < t0 < t_hi:
        at_zero = phi(t0)
        if abs(at_zero) <= xi:
            return t0
        if at_zero > xi:
            lo, hi, target = t0, t_hi, xi
        else:
            lo, hi, target = t_lo, t0, -xi
    elif t0 <= t_lo:
        lo, hi, target = t_lo, t_hi, xi
    else:
        lo, hi, target = t_lo, t_hi, -xi

    # phi decreases from +inf to -inf across the feasible interval
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * (1.0 + abs(lo) + abs(hi)):
            break
    return 0.5 * (lo + hi)


def solve_penalized_glasso(
    problem: PenalizedGLassoProblem,
    warm: np.ndarray,
    max_sweeps: int = _DEFAULT_SWEEPS,
    param_tol: float = 1e-10,
    kkt_tol: float | None = None,
) -> np.ndarray:
    """Maximize the penalized log-determinant objective by entry-wise
    coordinate descent from a positive-definite warm start."""
    q = problem.q
    omega = 0.5 * (np.array(warm, dtype=np.float64) + np.array(warm, dtype=np.float64).T)
    if omega.shape != (q, q):
        raise InputShapeError("warm start has wrong shape")
    try:
        A = linalg.pd_inverse(omega)
    except NotPositiveDefiniteError as exc:
        raise ConditioningError(f"warm start not positive definite: {exc}") from None
    if kkt_tol is None:
        kkt_tol = 1e-6 * max(problem.n, 1)

    n = problem.n
    for _ in range(max_sweeps):
        max_change = 0.0
        for k in range(q):
            t = n / (problem.S[k, k] + 2.0 * problem.xi1) - 1.0 / A[k, k]
            if t != 0.0:
                omega[k, k] += t
                coef = t / (1.0 + t * A[k, k])
                col = A[:, k].copy()
                A -= coef * np.outer(col, col)
                max_change = max(max_change, abs(t))
        for k in range(q):
            for l in range(k + 1, q):
                w = omega[k, l]
                t = _offdiag_step(problem.S[k, l], problem.xi_star[k, l], w,
                                  A[k, k], A[l, l], A[k, l], n)
                if t == 0.0:
                    continue
                new = 0.0 if t == -w else w + t
                omega[k, l] = new
                omega[l, k] = new
                ak = A[:, k].copy()
                al = A[:, l].copy()
                m11 = A[k, k]
                m12 = 1.0 / t + A[k, l]
                m22 = A[l, l]
                det = m11 * m22 - m12 * m12  # equals -Q(t)/t^2, never zero inside
                i11 = m22 / det
                i12 = -m12 / det
                i22 = m11 / det
                A -= (
                    np.outer(ak, ak) * i11
                    + np.outer(ak, al) * i12
                    + np.outer(al, ak) * i12
                    + np.outer(al, al) * i22
                )
                max_change = max(max_change, abs(t))
        try:
            A = linalg.pd_inverse(omega)
        except NotPositiveDefiniteError as exc:
            raise ConditioningError(
                f"precision iterate lost positive definiteness: {exc}"
            ) from None
        if max_change < param_tol and kkt_violation(problem, omega) <= kkt_tol:
            break
    return omega


def update_eta(q_star: np.ndarray, a_eta: float, b_eta: float, q: int) -> float:
    """Closed-form mode of the precision slab-weight factor, clipped into (0,1)."""
    pairs = q * (q - 1) / 2.0
    denom = a_eta + b_eta - 2.0 + pairs
    if denom <= 0.0:
        value = a_eta / (a_eta + b_eta)
    else:
        value = (a_eta - 1.0 + float(np.sum(q_star))) / denom
    return float(min(max(value, MIX_CLIP), 1.0 - MIX_CLIP))


def enforce_binary_unit_variance(state: ModelState, draws: LatentDraws | None, kinds):
    """Rescale so every binary outcome has unit latent residual variance.

    Scaling latent coordinate k by 1/d_k maps Omega to D Omega D, divides
    column k of B and of every draw by d_k, and preserves the sign of every
    binary latent, so the observed-data model is unchanged.
    """
    try:
        sigma = linalg.pd_inverse(state.Omega)
    except NotPositiveDefiniteError as exc:
        raise ConditioningError(f"cannot invert precision for rescaling: {exc}") from None
    d = np.ones(state.q)
    for k, kind in enumerate(kinds):
        if kind == OutcomeKind.BINARY:
            d[k] = math.sqrt(sigma[k, k])
    omega_new = state.Omega * np.outer(d, d)
    new_state = ModelState(
        B=state.B / d[None, :],
        Omega=omega_new,
        theta=state.theta,
        eta=state.eta,
    )
    new_draws = draws.rescale_columns(1.0 / d) if draws is not None else None
    return new_state, new_draws
