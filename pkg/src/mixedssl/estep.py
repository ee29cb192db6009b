"""Adaptive penalty mixing and Monte Carlo sufficient statistics.

Each E-step turns the current iterate into entry-specific slab probabilities
and blends the spike/slab rates into effective l1 penalties. The residual
cross-product is accumulated draw by draw so the stacked (nH) x q residual
matrix is never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputShapeError, ParameterError
from .types import Dataset, Hyperparameters, LatentDraws, ModelState


def slab_probability(value, rate_slab: float, rate_spike: float, mix: float):
    """Posterior probability that an entry of the given magnitude came from
    the slab component.

    Computed in log-odds space, so it is stable for |value| up to 1e308.
    Accepts scalars or arrays. With rate_slab == rate_spike the odds ratio
    collapses and the result is the prior weight `mix`.
    """
    if not (0.0 < mix < 1.0):
        raise ParameterError(f"mixing weight must lie in (0,1), got {mix}")
    if rate_slab <= 0 or rate_spike <= 0 or rate_slab > rate_spike:
        raise ParameterError("require 0 < rate_slab <= rate_spike")
    value = np.abs(np.asarray(value, dtype=np.float64))
    with np.errstate(over="ignore"):  # inf logit is the correct saturated limit
        logit = (
            np.log(mix) - np.log1p(-mix)
            + np.log(rate_slab) - np.log(rate_spike)
            + (rate_spike - rate_slab) * value
        )
    out = np.empty_like(logit)
    pos = logit >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-logit[pos]))
    enl = np.exp(logit[~pos])
    out[~pos] = enl / (1.0 + enl)
    if out.ndim == 0:
        return float(out)
    return out


def effective_penalty(p_star, rate_slab: float, rate_spike: float):
    """Blend the spike and slab rates with the slab probability."""
    p_star = np.asarray(p_star, dtype=np.float64)
    return rate_slab * p_star + rate_spike * (1.0 - p_star)


@dataclass(frozen=True)
class PenaltyState:
    """Slab probabilities and effective penalties for the current iterate.

    q_star and xi_star are strictly upper triangular; entries on and below
    the diagonal are zero.
    """

    p_star: np.ndarray
    q_star: np.ndarray
    lambda_star: np.ndarray
    xi_star: np.ndarray
    p_star_zero: float
    theta: float
    eta: float

    @property
    def sum_p_star(self) -> float:
        return float(self.p_star.sum())

    @property
    def sum_q_star(self) -> float:
        return float(self.q_star.sum())


def update_penalties(state: ModelState, hyper: Hyperparameters) -> PenaltyState:
    """Apply slab_probability to every coefficient and every upper-triangular
    precision entry, then fill the blended penalties."""
    p_star = slab_probability(state.B, hyper.lambda1, hyper.lambda0, state.theta)
    p_star = np.atleast_2d(p_star)
    lambda_star = effective_penalty(p_star, hyper.lambda1, hyper.lambda0)

    q = state.Omega.shape[0]
    q_star = np.zeros((q, q))
    xi_star = np.zeros((q, q))
    iu = np.triu_indices(q, k=1)
    if iu[0].size:
        qs = slab_probability(state.Omega[iu], hyper.xi1, hyper.xi0, state.eta)
        q_star[iu] = qs
        xi_star[iu] = effective_penalty(qs, hyper.xi1, hyper.xi0)
    return PenaltyState(
        p_star=p_star,
        q_star=q_star,
        lambda_star=lambda_star,
        xi_star=xi_star,
        p_star_zero=slab_probability(0.0, hyper.lambda1, hyper.lambda0, state.theta),
        theta=state.theta,
        eta=state.eta,
    )


@dataclass(frozen=True)
class SurrogateStats:
    """Monte Carlo residual cross-product S = (1/H) sum_h (Z_h - XB)^T (Z_h - XB)."""

    S: np.ndarray

    def __post_init__(self):
        s = np.array(self.S, dtype=np.float64)
        s = 0.5 * (s + s.T)
        s.setflags(write=False)
        object.__setattr__(self, "S", s)


def residual_stats(dataset: Dataset, B: np.ndarray, draws: LatentDraws) -> SurrogateStats:
    """Average residual cross-product over the latent draws.

    Accumulated one draw at a time in a fixed order, so the result is
    bit-stable and memory stays O(nq).
    """
    B = np.asarray(B, dtype=np.float64)
    if B.shape != (dataset.p, dataset.q):
        raise InputShapeError(
            f"B has shape {B.shape}, expected {(dataset.p, dataset.q)}"
        )
    fitted = dataset.X @ B
    q = dataset.q
    S = np.zeros((q, q))
    for h in range(draws.H):
        R = draws.draws[h] - fitted
        S += R.T @ R
    S /= draws.H
    return SurrogateStats(S=S)
