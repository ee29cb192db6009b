"""Support-recovery and predictive metrics, plus the sure-screening threshold.

Ratios with empty denominators (e.g. specificity when the truth is fully
dense) are reported as absent rather than zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from . import linalg
from .errors import InputShapeError, ParameterError
from .types import Dataset, ModelState, OutcomeKind


@dataclass(frozen=True)
class SupportReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @staticmethod
    def _ratio(num: int, denom: int):
        return num / denom if denom > 0 else None

    @property
    def sensitivity(self):
        return self._ratio(self.tp, self.tp + self.fn)

    @property
    def specificity(self):
        return self._ratio(self.tn, self.tn + self.fp)

    @property
    def precision(self):
        return self._ratio(self.tp, self.tp + self.fp)

    @property
    def accuracy(self):
        return self._ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn)


def support_metrics(estimated: np.ndarray, truth: np.ndarray) -> SupportReport:
    """Confusion-matrix ratios between two zero/nonzero patterns."""
    est = np.asarray(estimated) != 0
    tru = np.asarray(truth) != 0
    if est.shape != tru.shape:
        raise InputShapeError(
            f"pattern shapes differ: {est.shape} vs {tru.shape}"
        )
    return SupportReport(
        tp=int(np.sum(est & tru)),
        fp=int(np.sum(est & ~tru)),
        tn=int(np.sum(~est & ~tru)),
        fn=int(np.sum(~est & tru)),
    )


def upper_triangle(mat: np.ndarray) -> np.ndarray:
    """Strictly upper-triangular entries, the comparison set for precision
    support."""
    mat = np.asarray(mat)
    return mat[np.triu_indices(mat.shape[0], k=1)]


def conditional_means(X: np.ndarray, B: np.ndarray, omega: np.ndarray, kinds) -> np.ndarray:
    """E[Y | X] under the latent model: b'x for continuous outcomes and
    Phi(b'x / sqrt(latent variance)) for binary outcomes."""
    fitted = np.asarray(X) @ np.asarray(B)
    sigma = linalg.pd_inverse(omega)
    out = fitted.copy()
    for k, kind in enumerate(kinds):
        if kind == OutcomeKind.BINARY:
            out[:, k] = ndtr(fitted[:, k] / math.sqrt(sigma[k, k]))
    return out


def regression_function_error(X_test, B_hat, omega_hat, B_true, omega_true, kinds) -> float:
    """Mean l2 distance between estimated and true conditional mean vectors."""
    X_test = np.asarray(X_test)
    if X_test.shape[0] == 0:
        raise InputShapeError("test set is empty")
    mu_hat = conditional_means(X_test, B_hat, omega_hat, kinds)
    mu_true = conditional_means(X_test, B_true, omega_true, kinds)
    return float(np.mean(np.linalg.norm(mu_hat - mu_true, axis=1)))


def mann_whitney_auc(scores: np.ndarray, labels: np.ndarray):
    """Rank-based AUC with ties averaged; absent when labels are degenerate."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n1 = int(np.sum(labels == 1))
    n0 = int(np.sum(labels == 0))
    if n1 == 0 or n0 == 0:
        return None
    ranks = rankdata(scores)
    return float((np.sum(ranks[labels == 1]) - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def predictive_scores(test: Dataset, state: ModelState, seed=0, n_draws: int = 1) -> dict:
    """Held-out predictive metrics from the fitted model.

    rmse: outcomes simulated forward from the fitted model (n_draws per test
    row, averaged into the prediction) against observed test outcomes, mean
    over continuous columns. rmse_mean_prediction: same comparison with the
    fitted conditional mean as the prediction. auc: mean rank-based AUC of
    the predicted success probabilities over binary columns (degenerate
    columns excluded).
    """
    if n_draws < 1:
        raise ParameterError("n_draws must be >= 1")
    X, Y = test.X, test.Y
    n, q = Y.shape
    fitted = X @ state.B
    sigma = linalg.pd_inverse(state.Omega)
    L = linalg.cholesky(sigma)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    pred = np.zeros((n, q))
    for _ in range(n_draws):
        pred += fitted + rng.standard_normal((n, q)) @ L.T
    pred /= n_draws

    rmse_vals = []
    rmse_mean_vals = []
    aucs = []
    for k, kind in enumerate(test.kinds):
        if kind == OutcomeKind.CONTINUOUS:
            rmse_vals.append(float(np.sqrt(np.mean((pred[:, k] - Y[:, k]) ** 2))))
            rmse_mean_vals.append(float(np.sqrt(np.mean((fitted[:, k] - Y[:, k]) ** 2))))
        else:
            prob = ndtr(fitted[:, k] / math.sqrt(sigma[k, k]))
            auc = mann_whitney_auc(prob, Y[:, k])
            if auc is not None:
                aucs.append(auc)
    return {
        "rmse": float(np.mean(rmse_vals)) if rmse_vals else None,
        "rmse_mean_prediction": float(np.mean(rmse_mean_vals)) if rmse_mean_vals else None,
        "auc": float(np.mean(aucs)) if aucs else None,
    }


def sure_screen(B: np.ndarray, omega: np.ndarray, n: int, p: int, c: float) -> np.ndarray:
    """Element-wise hard threshold |beta_jk| > a_n * omega_kk with
    a_n^2 = c^2 log(p) / (n p^2) (natural log). Returns the surviving support."""
    if c <= 0:
        raise ParameterError("c must be positive")
    if n < 2 or p < 2:
        raise ParameterError("need n >= 2 and p >= 2")
    a_n = math.sqrt(c * c * math.log(p) / (n * p * p))
    B = np.asarray(B)
    diag = np.diag(np.asarray(omega))
    return np.abs(B) > a_n * diag[None, :]
