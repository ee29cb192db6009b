"""CM Step 1: cyclic coordinate ascent over the coefficient matrix with the
blended hard/soft threshold, plus the closed-form update of the slab weight.

The sweep kernel works on U = X^T (Zbar - XB), which it keeps consistent
with B through rank-one Gram updates; a full recomputation every
`recompute_every` sweeps caps floating-point drift. Scores depend on the
latent draws only through their mean, so the draws themselves never enter
the inner loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DivergenceError, ParameterError
from .estep import PenaltyState
from .types import Dataset, Hyperparameters, LatentDraws, ModelState, MIX_CLIP

MAX_SWEEPS = 1000
RECOMPUTE_EVERY = 50


@dataclass
class BetaWorkspace:
    """Scratch state for the coordinate sweeps (see module docstring)."""

    U: np.ndarray
    G: np.ndarray
    Zbar: np.ndarray
    X: np.ndarray

    @classmethod
    def build(cls, dataset: Dataset, B: np.ndarray, zbar: np.ndarray) -> "BetaWorkspace":
        U = dataset.X.T @ (zbar - dataset.X @ B)
        return cls(U=U, G=dataset.gram(), Zbar=zbar, X=dataset.X)

    def refresh(self, B: np.ndarray) -> None:
        self.U = self.X.T @ (self.Zbar - self.X @ B)

    def max_residual_drift(self, B: np.ndarray) -> float:
        return float(np.max(np.abs(self.U - self.X.T @ (self.Zbar - self.X @ B))))


def score(j: int, k: int, workspace: BetaWorkspace, B: np.ndarray, omega: np.ndarray,
          n: int, H: int) -> float:
    """Precision-weighted inner product between predictor j and the partial
    residuals, with predictor j's contribution excluded on the outcome being
    updated (the exact one-coordinate score of the CM objective).

    Linear in the latent draws, so it is evaluated through their mean.
    """
    return H * (float(workspace.U[j] @ omega[:, k]) + n * B[j, k] * omega[k, k])


def score_matrix(dataset: Dataset, zbar: np.ndarray, B: np.ndarray,
                 omega: np.ndarray, H: int) -> np.ndarray:
    """All scores at once; used by the fixed-point (KKT) checks."""
    U = dataset.X.T @ (zbar - dataset.X @ B)
    return H * (U @ omega + dataset.n * B * np.diag(omega)[None, :])


def threshold_delta(p_star_zero: float, lambda1: float, lambda0: float,
                    omega_kk: float, nH: float) -> float:
    """Hard-threshold gate for one outcome.

    When the spike-slab gap condition (lambda*(0) - lambda1)^2 > 2 d log(1/p*(0))
    holds, the refined selection threshold applies; otherwise the gate equals
    the plain soft-threshold level at zero, so hard gating is inert there.
    """
    if omega_kk <= 0:
        raise ParameterError("omega_kk must be positive")
    d = nH * omega_kk
    lam_star0 = lambda1 * p_star_zero + lambda0 * (1.0 - p_star_zero)
    log_inv_p0 = -math.log(p_star_zero)
    if (lam_star0 - lambda1) ** 2 > 2.0 * d * log_inv_p0:
        return (math.sqrt(2.0 * d * log_inv_p0) + lambda1) / d
    return lam_star0 / d


def update_beta_entry(score_jk: float, lambda_star_jk: float, delta_jk: float,
                      omega_kk: float, nH: float) -> float:
    """Blended hard/soft threshold update for a single coefficient."""
    d = nH * omega_kk
    shrunk = abs(score_jk) - lambda_star_jk
    if shrunk > 0.0 and abs(score_jk) / d > delta_jk:
        return math.copysign(shrunk, score_jk) / d
    return 0.0


def cm1_objective(dataset: Dataset, draws: LatentDraws, B: np.ndarray,
                  omega: np.ndarray, lambda_star: np.ndarray) -> float:
    """Coefficient part of the CM Step 1 objective, averaged over draws:
    -(1/2H) sum_{i,h} (z - B'x)' Omega (z - B'x) - sum lambda*_jk |beta_jk|.

    This is the functional the coordinate sweeps maximize."""
    fitted = dataset.X @ B
    quad = 0.0
    for h in range(draws.H):
        R = draws.draws[h] - fitted
        quad += float(np.sum((R @ omega) * R))
    return -0.5 * quad / draws.H - float(np.sum(lambda_star * np.abs(B)))


def update_theta(sum_p_star: float, a_theta: float, b_theta: float, pq: int) -> float:
    """Closed-form mode of the slab-weight factor, clipped into (0, 1)."""
    denom = a_theta + b_theta - 2.0 + pq
    if denom <= 0.0:
        value = a_theta / (a_theta + b_theta)
    else:
        value = (a_theta - 1.0 + sum_p_star) / denom
    return float(min(max(value, MIX_CLIP), 1.0 - MIX_CLIP))


def cm_step_beta(
    dataset: Dataset,
    draws: LatentDraws,
    state: ModelState,
    penalties: PenaltyState,
    hyper: Hyperparameters,
    max_sweeps: int = MAX_SWEEPS,
    recompute_every: int = RECOMPUTE_EVERY,
    debug: bool = False,
):
    """Full CM Step 1: sweep to convergence, then update theta in closed form.

    Returns (B_new, theta_new, info) where info records sweep counts and the
    convergence flag.
    """
    n, p, q = dataset.n, dataset.p, dataset.q
    zbar = draws.mean()
    B = np.array(state.B, dtype=np.float64)
    ws = BetaWorkspace.build(dataset, B, zbar)
    # Scores are averaged over the latent draws (the E-step normalization),
    # so the effective curvature of each 1-D problem is n * omega_kk and the
    # sweep kernel runs with a unit draw multiplier.
    delta = np.array([
        threshold_delta(penalties.p_star_zero, hyper.lambda1, hyper.lambda0,
                        float(state.Omega[k, k]), float(n))
        for k in range(q)
    ])
    lam = np.ascontiguousarray(penalties.lambda_star)
    omega = np.ascontiguousarray(state.Omega)

    if debug:
        obj_before = cm1_objective(dataset, draws, B, omega, lam)

    sweeps_total = 0
    converged = False
    while sweeps_total < max_sweeps:
        chunk = min(recompute_every, max_sweeps - sweeps_total)
        used, last_change = _backend.cd_sweeps(
            B, ws.U, ws.G, omega, lam, delta, n, 1, hyper.tol, chunk
        )
        sweeps_total += used
        if debug and ws.max_residual_drift(B) > 1e-8 * max(1.0, float(np.max(np.abs(ws.Zbar)))):
            raise AssertionError("incremental residuals drifted from recomputation")
        if last_change < hyper.tol:
            converged = True
            break
        ws.refresh(B)

    if not np.all(np.isfinite(B)):
        j, k = map(int, np.argwhere(~np.isfinite(B))[0])
        raise DivergenceError(f"non-finite coefficient at ({j},{k}) during CM step 1")

    if debug:
        obj_after = cm1_objective(dataset, draws, B, omega, lam)
        floor = obj_before - 1e-8 * max(1.0, abs(obj_before))
        if obj_after < floor:
            raise AssertionError(
                f"CM step 1 objective decreased: {obj_before} -> {obj_after}"
            )

    theta_new = update_theta(penalties.sum_p_star, hyper.a_theta, hyper.b_theta, p * q)
    info = {"sweeps": sweeps_total, "converged": converged}
    return B, theta_new, info


def kkt_violations(dataset: Dataset, draws: LatentDraws, B: np.ndarray,
                   omega: np.ndarray, penalties: PenaltyState,
                   hyper: Hyperparameters) -> dict:
    """Fixed-point residuals of the blended threshold update at B.

    For nonzero entries, |S - nH omega_kk beta| should equal lambda*; zero
    entries must fail either the soft threshold or the hard gate.
    """
    n, q = dataset.n, dataset.q
    S = score_matrix(dataset, draws.mean(), B, omega, 1)
    nH = float(n)
    nonzero_gap = 0.0
    zero_gap = 0.0
    for k in range(q):
        d = nH * omega[k, k]
        delta_k = threshold_delta(penalties.p_star_zero, hyper.lambda1, hyper.lambda0,
                                  float(omega[k, k]), nH)
        for j in range(dataset.p):
            if B[j, k] != 0.0:
                gap = abs(abs(S[j, k] - d * B[j, k]) - penalties.lambda_star[j, k])
                nonzero_gap = max(nonzero_gap, gap)
            else:
                soft = abs(S[j, k]) - penalties.lambda_star[j, k]
                hard = abs(S[j, k]) / d - delta_k
                zero_gap = max(zero_gap, min(soft, hard))
    return {"nonzero": nonzero_gap, "zero": zero_gap}
