"""Synthetic data generation: AR/block/graph precision structures, sparse
coefficient regimes, autocorrelated Gaussian covariates, and forward
simulation through the latent model.
"""

from __future__ import annotations

import enum
import logging

import numpy as np

from . import linalg
from .errors import ConditioningError, NotPositiveDefiniteError, ParameterError
from .types import Dataset, OutcomeKind, apply_link

logger = logging.getLogger(__name__)

EDGE_WEIGHT_LO = 0.2
EDGE_WEIGHT_HI = 0.5
DIAGONAL_SLACK = 0.1


class OmegaStructure(enum.Enum):
    AR1 = "ar1"
    AR2 = "ar2"
    BLOCK_DIAGONAL = "block"
    STAR = "star"
    SMALL_WORLD = "smallworld"
    TREE = "tree"


class SignalRegime(enum.Enum):
    UNIFORM = "uniform"
    DISJOINT = "disjoint"


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _ar1_precision(q: int, rho: float = 0.7) -> np.ndarray:
    """Analytic tridiagonal inverse of the covariance rho^{|k-k'|}."""
    om = np.zeros((q, q))
    c = 1.0 / (1.0 - rho * rho)
    for k in range(q):
        om[k, k] = c if k in (0, q - 1) else (1.0 + rho * rho) * c
        if k + 1 < q:
            om[k, k + 1] = -rho * c
            om[k + 1, k] = -rho * c
    return om


def _ar2_precision(q: int) -> np.ndarray:
    om = np.eye(q)
    for k in range(q - 1):
        om[k, k + 1] = om[k + 1, k] = 0.5
    for k in range(q - 2):
        om[k, k + 2] = om[k + 2, k] = 0.25
    return om


def _block_precision(q: int) -> np.ndarray:
    """Covariance is block diagonal with equicorrelated (0.5) unit-variance
    blocks; the precision inherits the same block support."""
    sizes = [(q + 1) // 2, q // 2]
    om = np.zeros((q, q))
    start = 0
    for size in sizes:
        if size == 0:
            continue
        sigma = np.full((size, size), 0.5)
        np.fill_diagonal(sigma, 1.0)
        om[start:start + size, start:start + size] = linalg.pd_inverse(sigma)
        start += size
    return om


def _star_precision(q: int) -> np.ndarray:
    om = np.eye(q)
    om[0, 1:] = 0.1
    om[1:, 0] = 0.1
    return om


def _watts_strogatz_edges(q: int, rewire_prob: float, rng) -> set:
    """Ring lattice with one neighbor per side, rewired with the given
    probability (single community)."""
    edges = {(k, (k + 1) % q) for k in range(q)}
    edges = {(min(a, b), max(a, b)) for a, b in edges}
    out = set(edges)
    for a, b in sorted(edges):
        if rng.random() >= rewire_prob:
            continue
        candidates = [
            v for v in range(q)
            if v != a and (min(a, v), max(a, v)) not in out
        ]
        if not candidates:
            continue
        new = candidates[rng.integers(0, len(candidates))]
        out.discard((a, b))
        out.add((min(a, new), max(a, new)))
    return out


def _wilson_tree_edges(q: int, rng) -> set:
    """Uniform spanning tree of the complete graph via loop-erased random walk."""
    in_tree = [False] * q
    nxt = [-1] * q
    in_tree[0] = True
    for start in range(1, q):
        v = start
        while not in_tree[v]:
            step = int(rng.integers(0, q - 1))
            nxt[v] = step if step < v else step + 1  # uniform over others
            v = nxt[v]
        v = start
        while not in_tree[v]:
            in_tree[v] = True
            v = nxt[v]
    edges = set()
    for v in range(1, q):
        edges.add((min(v, nxt[v]), max(v, nxt[v])))
    return edges


def _graph_precision(edges: set, q: int, rng) -> np.ndarray:
    """Diagonally dominant precision supported exactly on the given edges:
    edge weights uniform on +-[0.2, 0.5], diagonal 1 + sum |weights| + 0.1."""
    om = np.zeros((q, q))
    for a, b in sorted(edges):
        w = rng.uniform(EDGE_WEIGHT_LO, EDGE_WEIGHT_HI)
        if rng.random() < 0.5:
            w = -w
        om[a, b] = om[b, a] = w
    for k in range(q):
        om[k, k] = 1.0 + np.sum(np.abs(om[k, :])) + DIAGONAL_SLACK
    return om


def gen_omega(structure: OmegaStructure, q: int, seed=0, rewire_prob: float = 0.1) -> np.ndarray:
    """Generate a precision matrix with the requested dependence structure."""
    if q < 2:
        raise ParameterError("need q >= 2 outcomes to build a dependence structure")
    if structure == OmegaStructure.AR1:
        om = _ar1_precision(q)
    elif structure == OmegaStructure.AR2:
        if q < 3:
            raise ParameterError("AR2 structure needs q >= 3")
        om = _ar2_precision(q)
    elif structure == OmegaStructure.BLOCK_DIAGONAL:
        om = _block_precision(q)
    elif structure == OmegaStructure.STAR:
        om = _star_precision(q)
    elif structure == OmegaStructure.SMALL_WORLD:
        if q < 3:
            raise ParameterError("small-world structure needs q >= 3")
        rng = _rng((seed, 1))
        om = _graph_precision(_watts_strogatz_edges(q, rewire_prob, rng), q, rng)
    elif structure == OmegaStructure.TREE:
        rng = _rng((seed, 2))
        om = _graph_precision(_wilson_tree_edges(q, rng), q, rng)
    else:
        raise ParameterError(f"unknown structure {structure}")
    linalg.cholesky(om)  # every generated precision must be PD
    return om


def gen_coefficients(
    regime: SignalRegime,
    p: int,
    q: int,
    seed=0,
    density: float = 0.3,
    uniform_lo: float = -5.0,
    uniform_hi: float = 5.0,
    disjoint_inner: float = 2.0,
    disjoint_outer: float = 5.0,
) -> np.ndarray:
    """Sparse coefficient matrix: exactly round(density*p*q) nonzero entries
    at uniformly chosen positions, values drawn by the regime."""
    if not 0.0 <= density < 1.0:
        raise ParameterError("density must lie in [0, 1)")
    rng = _rng(seed)
    m = int(round(density * p * q))
    flat = np.zeros(p * q)
    if m > 0:
        positions = rng.choice(p * q, size=m, replace=False)
        if regime == SignalRegime.UNIFORM:
            values = rng.uniform(uniform_lo, uniform_hi, size=m)
        elif regime == SignalRegime.DISJOINT:
            magnitudes = rng.uniform(disjoint_inner, disjoint_outer, size=m)
            signs = rng.integers(0, 2, size=m) * 2 - 1
            values = magnitudes * signs
        else:
            raise ParameterError(f"unknown regime {regime}")
        flat[positions] = values
    return flat.reshape(p, q)


def gen_covariates(n: int, p: int, seed=0) -> np.ndarray:
    """Rows i.i.d. Gaussian with covariance 0.5^{|j-j'|} (Cholesky computed once)."""
    idx = np.arange(p)
    gamma = 0.5 ** np.abs(idx[:, None] - idx[None, :])
    L = linalg.cholesky(gamma)
    rng = _rng(seed)
    return rng.standard_normal((n, p)) @ L.T


def simulate_outcomes(X: np.ndarray, B: np.ndarray, omega: np.ndarray, kinds, seed=0) -> np.ndarray:
    """Draw latent rows from N(B'x, Omega^{-1}) and push them through the link."""
    try:
        sigma = linalg.pd_inverse(omega)
        L = linalg.cholesky(sigma)
    except NotPositiveDefiniteError as exc:
        raise ConditioningError(f"cannot factor latent covariance: {exc}") from None
    kinds = list(kinds)
    for k, kind in enumerate(kinds):
        if kind == OutcomeKind.BINARY and abs(sigma[k, k] - 1.0) > 1e-8:
            logger.warning(
                "binary outcome %d has latent variance %.4f (not 1); "
                "the fitted model absorbs the scale via rescaling", k, sigma[k, k],
            )
    rng = _rng(seed)
    n = X.shape[0]
    Z = X @ B + rng.standard_normal((n, omega.shape[0])) @ L.T
    return apply_link(Z, kinds)


def default_kinds(q: int, q_binary: int | None = None) -> list[OutcomeKind]:
    """Continuous block first, binary block second; default split q_b = q//2."""
    if q_binary is None:
        q_binary = q // 2
    if not 0 <= q_binary <= q:
        raise ParameterError("q_binary must lie in [0, q]")
    return [OutcomeKind.CONTINUOUS] * (q - q_binary) + [OutcomeKind.BINARY] * q_binary


def simulate_dataset(
    n: int,
    p: int,
    q: int,
    structure: OmegaStructure = OmegaStructure.AR1,
    regime: SignalRegime = SignalRegime.UNIFORM,
    q_binary: int | None = None,
    density: float = 0.3,
    seed=0,
    rewire_prob: float = 0.1,
):
    """Full simulation protocol. The truth coefficients apply to the
    standardized design, so the fitted model is exactly well-specified.

    Returns (X_raw, Y, B_true, Omega_true, kinds).
    """
    kinds = default_kinds(q, q_binary)
    omega = gen_omega(structure, q, seed=(seed, 0), rewire_prob=rewire_prob)
    B = gen_coefficients(regime, p, q, seed=(seed, 1), density=density)
    x_raw = gen_covariates(n, p, seed=(seed, 2))
    from .types import standardize

    x_std, _, _ = standardize(x_raw)
    Y = simulate_outcomes(x_std, B, omega, kinds, seed=(seed, 3))
    return x_raw, Y, B, omega, kinds


def dataset_from_simulation(x_raw, Y, kinds) -> Dataset:
    return Dataset.from_raw(x_raw, Y, kinds)
