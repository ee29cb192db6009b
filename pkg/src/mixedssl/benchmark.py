"""Benchmark harness: simulate -> split -> fit -> evaluate over a grid of
precision structures, signal regimes, and replicates.

Replicates run in a process pool; every replicate derives its own seed, so
output is identical for any worker count. Rows are ordered by (structure,
regime, replicate) regardless of completion order. Wall-clock numbers go to
a separate timings file so the data outputs stay byte-reproducible.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .driver import Convergence, FitConfig, default_hyperparameters, fit_path
from .io import format_metric, write_manifest, write_timings
from .metrics import (
    predictive_scores,
    regression_function_error,
    support_metrics,
    upper_triangle,
)
from .simulate import OmegaStructure, SignalRegime, simulate_dataset
from .types import Dataset

RESULT_COLUMNS = [
    "structure", "regime", "replicate",
    "b_sen", "b_spec", "b_prec", "b_acc",
    "omega_sen", "omega_spec", "omega_prec", "omega_acc",
    "rfe", "rmse", "rmse_meanpred", "auc",
]


@dataclass(frozen=True)
class BenchmarkConfig:
    n: int = 200
    p: int = 100
    q: int = 4
    q_binary: int | None = None
    structures: tuple = ("ar1",)
    regimes: tuple = ("uniform",)
    replicates: int = 10
    density: float = 0.3
    H: int = 100
    seed: int = 0
    workers: int = 1
    lambda0_grid: tuple = ()
    xi0_grid: tuple = ()
    max_outer: int = 100
    tol: float = 1e-3
    min_iter: int = 5
    burn_in: int = 50
    thin: int = 1
    rmse_draws: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["structures"] = list(self.structures)
        d["regimes"] = list(self.regimes)
        d["lambda0_grid"] = list(self.lambda0_grid)
        d["xi0_grid"] = list(self.xi0_grid)
        return d


@dataclass
class ReplicateResult:
    structure: str
    regime: str
    replicate: int
    metrics: dict = field(default_factory=dict)
    fit_seconds: float = 0.0
    error: str | None = None


def evaluate_fit(state, b_true, omega_true, test: Dataset, seed, rmse_draws: int = 1) -> dict:
    """Metric row for one fitted state against the truth and a test set."""
    rep_b = support_metrics(state.B, b_true)
    rep_om = support_metrics(upper_triangle(state.Omega), upper_triangle(omega_true))
    pred = predictive_scores(test, state, seed=seed, n_draws=rmse_draws)
    rfe = regression_function_error(
        test.X, state.B, state.Omega, b_true, omega_true, test.kinds
    )
    return {
        "b_sen": rep_b.sensitivity, "b_spec": rep_b.specificity,
        "b_prec": rep_b.precision, "b_acc": rep_b.accuracy,
        "omega_sen": rep_om.sensitivity, "omega_spec": rep_om.specificity,
        "omega_prec": rep_om.precision, "omega_acc": rep_om.accuracy,
        "rfe": rfe, "rmse": pred["rmse"],
        "rmse_meanpred": pred["rmse_mean_prediction"], "auc": pred["auc"],
    }


def split_train_test(x_raw, Y, kinds, n_train: int, seed):
    """Seeded shuffle; the first n_train rows train, the rest test. Both
    halves standardize their own covariate rows."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    perm = rng.permutation(x_raw.shape[0])
    train_idx = perm[:n_train]
    test_idx = perm[n_train:]
    train = Dataset.from_raw(x_raw[train_idx], Y[train_idx], kinds)
    test = Dataset.from_raw(x_raw[test_idx], Y[test_idx], kinds)
    return train, test


def run_replicate(config: BenchmarkConfig, structure: str, regime: str, replicate: int) -> ReplicateResult:
    result = ReplicateResult(structure=structure, regime=regime, replicate=replicate)
    try:
        s_idx = list(config.structures).index(structure)
        r_idx = list(config.regimes).index(regime)
        rep_seed = (config.seed, s_idx, r_idx, replicate)
        n_test = math.ceil(config.n / 2)
        x_raw, Y, b_true, omega_true, kinds = simulate_dataset(
            n=config.n + n_test, p=config.p, q=config.q,
            structure=OmegaStructure(structure), regime=SignalRegime(regime),
            q_binary=config.q_binary, density=config.density, seed=rep_seed,
        )
        train, test = split_train_test(x_raw, Y, kinds, config.n, rep_seed + (4,))

        hyper = default_hyperparameters(
            n=train.n, p=train.p, q=train.q, H=config.H,
            lambda0_grid=config.lambda0_grid or None,
            xi0_grid=config.xi0_grid or None,
        )
        fit_cfg = FitConfig(
            hyper=hyper,
            global_seed=int(np.random.SeedSequence(rep_seed).generate_state(1)[0]),
            convergence=Convergence(max_outer=config.max_outer, tol=config.tol,
                                    min_iter=config.min_iter),
            burn_in=config.burn_in,
            thin=config.thin,
        )
        start = time.perf_counter()
        path = fit_path(train, fit_cfg)
        result.fit_seconds = time.perf_counter() - start
        result.metrics = evaluate_fit(
            path.default_estimate, b_true, omega_true, test,
            seed=rep_seed + (5,), rmse_draws=config.rmse_draws,
        )
    except Exception as exc:  # quarantined into errors.csv, run continues
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def _worker(args):
    return run_replicate(*args)


def run_benchmark(config: BenchmarkConfig, out_dir) -> list:
    os.makedirs(out_dir, exist_ok=True)
    tasks = [
        (config, structure, regime, rep)
        for structure in config.structures
        for regime in config.regimes
        for rep in range(config.replicates)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_worker, tasks))
    else:
        results = [_worker(task) for task in tasks]
    results.sort(key=lambda r: (
        list(config.structures).index(r.structure),
        list(config.regimes).index(r.regime),
        r.replicate,
    ))

    ok = [r for r in results if r.error is None]
    failed = [r for r in results if r.error is not None]

    with open(os.path.join(out_dir, "results.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in ok:
            writer.writerow(
                [r.structure, r.regime, r.replicate]
                + [format_metric(r.metrics[c]) for c in RESULT_COLUMNS[3:]]
            )

    with open(os.path.join(out_dir, "aggregate.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["structure", "regime", "n_replicates"] + RESULT_COLUMNS[3:])
        for structure in config.structures:
            for regime in config.regimes:
                rows = [r for r in ok if r.structure == structure and r.regime == regime]
                if not rows:
                    continue
                means = []
                for col in RESULT_COLUMNS[3:]:
                    vals = [r.metrics[col] for r in rows if r.metrics[col] is not None]
                    means.append(float(np.mean(vals)) if vals else None)
                writer.writerow([structure, regime, len(rows)]
                                + [format_metric(v) for v in means])

    if failed:
        with open(os.path.join(out_dir, "errors.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["structure", "regime", "replicate", "error"])
            for r in failed:
                writer.writerow([r.structure, r.regime, r.replicate, r.error])

    write_timings(os.path.join(out_dir, "timings.json"), {
        "fit_seconds": {
            f"{r.structure}/{r.regime}/{r.replicate}": r.fit_seconds for r in ok
        },
    })
    write_manifest(
        os.path.join(out_dir, "manifest.json"),
        command="benchmark",
        config=config.to_dict(),
    )
    return results
