"""MCECM orchestration: Monte Carlo E-step, the two conditional maximization
steps, identifiability rescaling, convergence detection, and the warm-started
sweep over the spike-penalty grid.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .cm_beta import cm_step_beta
from .cm_omega import (
    PenalizedGLassoProblem,
    enforce_binary_unit_variance,
    glasso_objective,
    solve_penalized_glasso,
    update_eta,
)
from .errors import DivergenceError, ParameterError
from .estep import residual_stats, update_penalties
from .sampler import DEFAULT_BURN_IN, DEFAULT_THIN, sample_latents
from .types import Dataset, Hyperparameters, LatentDraws, ModelState


@dataclass(frozen=True)
class Convergence:
    """Outer-loop stopping rule: the relative change of B and Omega must stay
    below tol for `consecutive` iterations (smoothing over Monte Carlo noise),
    with at least min_iter iterations and at most max_outer."""

    max_outer: int = 100
    tol: float = 1e-3
    min_iter: int = 5
    consecutive: int = 3

    def __post_init__(self):
        if self.max_outer < 1 or self.min_iter < 1 or self.consecutive < 1:
            raise ParameterError("iteration counts must be positive")
        if self.tol <= 0:
            raise ParameterError("tol must be positive")


@dataclass(frozen=True)
class FitConfig:
    hyper: Hyperparameters
    global_seed: int = 0
    convergence: Convergence = field(default_factory=Convergence)
    burn_in: int = DEFAULT_BURN_IN
    thin: int = DEFAULT_THIN
    h_schedule: tuple = ()


@dataclass
class FitDiagnostics:
    lambda0: float
    xi0: float
    iterations: int = 0
    converged: bool = False
    objective: float = math.nan
    b_support: int = 0
    omega_support: int = 0
    h_effective: int = 1
    sampler_fallbacks: int = 0
    trace: list = field(default_factory=list)


@dataclass
class PathResult:
    """Estimates along the (lambda0, xi0) ladder; the final (spikiest) grid
    point is the default point estimate."""

    grid: list
    estimates: list
    diagnostics: list

    @property
    def default_index(self) -> int:
        return len(self.grid) - 1

    @property
    def default_estimate(self) -> ModelState:
        return self.estimates[self.default_index]


def default_hyperparameters(
    n: int,
    p: int,
    q: int,
    H: int = 2000,
    lambda0_grid=None,
    xi0_grid=None,
    lambda1: float | None = None,
    xi1: float | None = None,
    tol: float = 1e-4,
    max_iter: int = 100,
) -> Hyperparameters:
    """Recommended defaults: lambda1 = 1/sqrt(n log n), xi1 = n/100,
    a_theta=1, b_theta=pq, a_eta=1, b_eta=q, and ten-point ladders for the
    spike rates (10..100 and n/10..n)."""
    if lambda0_grid is None:
        lambda0_grid = tuple(np.linspace(10.0, 100.0, 10))
    if xi0_grid is None:
        xi0_grid = tuple(np.linspace(n / 10.0, float(n), 10))
    lambda1 = 1.0 / math.sqrt(n * math.log(n)) if lambda1 is None else lambda1
    xi1 = n / 100.0 if xi1 is None else xi1
    return Hyperparameters(
        lambda1=lambda1,
        lambda0=max(lambda0_grid),
        xi1=xi1,
        xi0=max(xi0_grid),
        a_theta=1.0,
        b_theta=float(p * q),
        a_eta=1.0,
        b_eta=float(q),
        H=H,
        lambda0_grid=tuple(lambda0_grid),
        xi0_grid=tuple(xi0_grid),
        tol=tol,
        max_iter=max_iter,
    )


def initial_state(dataset: Dataset, hyper: Hyperparameters) -> ModelState:
    """Neutral cold start: zero coefficients, identity precision, prior-mean
    mixing weights."""
    return ModelState(
        B=np.zeros((dataset.p, dataset.q)),
        Omega=np.eye(dataset.q),
        theta=hyper.a_theta / (hyper.a_theta + hyper.b_theta),
        eta=hyper.a_eta / (hyper.a_eta + hyper.b_eta),
    )


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.linalg.norm(new - old) / max(1.0, np.linalg.norm(old)))


def surrogate_objective(dataset: Dataset, draws: LatentDraws, state: ModelState,
                        hyper: Hyperparameters) -> float:
    """Full surrogate value at the current state (penalties recomputed there)."""
    pen = update_penalties(state, hyper)
    stats = residual_stats(dataset, state.B, draws)
    problem = PenalizedGLassoProblem(S=stats.S, n=dataset.n, xi1=hyper.xi1,
                                     xi_star=pen.xi_star)
    val = glasso_objective(problem, state.Omega)
    val -= float(np.sum(pen.lambda_star * np.abs(state.B)))
    pq = dataset.p * dataset.q
    pairs = dataset.q * (dataset.q - 1) / 2.0
    val += (hyper.a_theta - 1.0 + pen.sum_p_star) * math.log(state.theta)
    val += (hyper.b_theta - 1.0 + pq - pen.sum_p_star) * math.log1p(-state.theta)
    val += (hyper.a_eta - 1.0 + pen.sum_q_star) * math.log(state.eta)
    val += (hyper.b_eta - 1.0 + pairs - pen.sum_q_star) * math.log1p(-state.eta)
    return val


def fit_single(
    dataset: Dataset,
    config: FitConfig,
    lambda0: float | None = None,
    xi0: float | None = None,
    init: ModelState | None = None,
    grid_index: int = 0,
    callback=None,
) -> tuple[ModelState, FitDiagnostics]:
    """Run the MCECM loop at one (lambda0, xi0) pair.

    Each iteration draws fresh latent completions (seeds keyed by
    (global_seed, grid_index, iteration, observation)), updates the penalty
    mixing, runs CM step 1 then CM step 2 on the same draws, and rescales for
    identifiability before testing convergence.
    """
    hyper = config.hyper
    if lambda0 is not None or xi0 is not None:
        hyper = dataclasses.replace(
            hyper,
            lambda0=float(lambda0 if lambda0 is not None else hyper.lambda0),
            xi0=float(xi0 if xi0 is not None else hyper.xi0),
        )
    conv = config.convergence
    state = init if init is not None else initial_state(dataset, hyper)
    diag = FitDiagnostics(lambda0=hyper.lambda0, xi0=hyper.xi0)

    streak = 0
    draws = None
    for t in range(1, conv.max_outer + 1):
        H_t = hyper.H
        if config.h_schedule:
            H_t = int(config.h_schedule[min(t - 1, len(config.h_schedule) - 1)])
        draws = sample_latents(
            dataset, state, H_t,
            seed_ctx=(config.global_seed, grid_index, t),
            burn_in=config.burn_in, thin=config.thin,
        )
        pen = update_penalties(state, hyper)
        B_new, theta_new, cm1 = cm_step_beta(dataset, draws, state, pen, hyper)
        stats = residual_stats(dataset, B_new, draws)
        problem = PenalizedGLassoProblem(S=stats.S, n=dataset.n,
                                         xi1=hyper.xi1, xi_star=pen.xi_star)
        omega_new = solve_penalized_glasso(problem, warm=state.Omega)
        eta_new = update_eta(pen.q_star, hyper.a_eta, hyper.b_eta, dataset.q)
        new_state = ModelState(B=B_new, Omega=omega_new, theta=theta_new, eta=eta_new)
        new_state, draws = enforce_binary_unit_variance(new_state, draws, dataset.kinds)

        if not (np.all(np.isfinite(new_state.B)) and np.all(np.isfinite(new_state.Omega))):
            raise DivergenceError(
                f"non-finite iterate at outer iteration {t}", trace=diag.trace
            )

        rel_b = _rel_change(new_state.B, state.B)
        rel_om = _rel_change(new_state.Omega, state.Omega)
        diag.trace.append({
            "iteration": t,
            "rel_change_b": rel_b,
            "rel_change_omega": rel_om,
            "cm1_sweeps": cm1["sweeps"],
            "sampler_fallbacks": draws.fallback_count,
        })
        diag.sampler_fallbacks += draws.fallback_count
        state = new_state
        if callback is not None:
            callback(t, state, draws)

        streak = streak + 1 if max(rel_b, rel_om) < conv.tol else 0
        diag.iterations = t
        if t >= conv.min_iter and streak >= conv.consecutive:
            diag.converged = True
            break

    diag.h_effective = draws.H if draws is not None else 1
    diag.objective = surrogate_objective(dataset, draws, state, hyper)
    diag.b_support = int(np.count_nonzero(state.B))
    diag.omega_support = int(np.count_nonzero(np.triu(state.Omega, k=1)))
    return state, diag


def fit_path(dataset: Dataset, config: FitConfig) -> PathResult:
    """Sweep the spike-penalty grid with warm starts.

    The ladder ascends xi0 in the outer loop and lambda0 in the inner loop;
    each point starts from its predecessor's estimate, and the final point
    (largest spike penalties) is the default point estimate.
    """
    hyper = config.hyper
    lambda0_grid = hyper.lambda0_grid or (hyper.lambda0,)
    xi0_grid = hyper.xi0_grid or (hyper.xi0,)
    grid = [(l0, x0) for x0 in xi0_grid for l0 in lambda0_grid]

    estimates = []
    diagnostics = []
    state = None
    for idx, (l0, x0) in enumerate(grid):
        try:
            state, diag = fit_single(
                dataset, config, lambda0=l0, xi0=x0, init=state, grid_index=idx
            )
        except DivergenceError as exc:
            raise DivergenceError(
                f"grid point {idx} (lambda0={l0}, xi0={x0}): {exc}", trace=exc.trace
            ) from None
        estimates.append(state)
        diagnostics.append(diag)
    return PathResult(grid=grid, estimates=estimates, diagnostics=diagnostics)
