"""Command-line surface: simulate, fit, evaluate, benchmark.

Option resolution order: built-in default < config file (--config, flat
key=value lines) < manifest (--from-manifest) < explicit flag. Every command
writes a manifest.json with its fully resolved configuration; re-running
from that manifest reproduces the data outputs byte for byte (wall-clock
goes to a separate timings file).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import io as mio
from .benchmark import BenchmarkConfig, run_benchmark
from .driver import Convergence, FitConfig, default_hyperparameters, fit_path
from .errors import (
    ConditioningError,
    DataValidationError,
    DivergenceError,
    MixedSslError,
    NotPositiveDefiniteError,
    ParameterError,
)
from .metrics import (
    predictive_scores,
    regression_function_error,
    sure_screen,
    support_metrics,
    upper_triangle,
)
from .simulate import OmegaStructure, SignalRegime, simulate_dataset
from .types import Dataset, ModelState

USAGE_EXIT = 1
DATA_EXIT = 2
NUMERICAL_EXIT = 3

STRUCTURE_NAMES = [s.value for s in OmegaStructure]
REGIME_NAMES = [r.value for r in SignalRegime]

EVAL_COLUMNS = [
    "b_sen", "b_spec", "b_prec", "b_acc",
    "omega_sen", "omega_spec", "omega_prec", "omega_acc",
    "rfe", "rmse", "rmse_meanpred", "auc", "time_s",
]


class UsageError(MixedSslError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_grid(text) -> tuple:
    """Grid syntax lo:hi:count (count evenly spaced values) or a comma list."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be lo:hi:count, got {text!r}")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise UsageError("grid count must be >= 1")
        return tuple(np.linspace(lo, hi, count))
    return tuple(float(v) for v in text.split(",") if v.strip())


def parse_structures(text) -> tuple:
    if isinstance(text, (list, tuple)):
        names = [str(v) for v in text]
    elif str(text).strip() == "all":
        names = list(STRUCTURE_NAMES)
    else:
        names = [v.strip() for v in str(text).split(",") if v.strip()]
    for name in names:
        if name not in STRUCTURE_NAMES:
            raise UsageError(
                f"unknown structure {name!r}; valid names: {', '.join(STRUCTURE_NAMES)}"
            )
    return tuple(names)


def parse_regimes(text) -> tuple:
    if isinstance(text, (list, tuple)):
        names = [str(v) for v in text]
    else:
        names = [v.strip() for v in str(text).split(",") if v.strip()]
    for name in names:
        if name not in REGIME_NAMES:
            raise UsageError(
                f"unknown regime {name!r}; valid names: {', '.join(REGIME_NAMES)}"
            )
    return tuple(names)


def read_config_file(path) -> dict:
    """Flat key=value file; blank lines and # comments ignored."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve(args: argparse.Namespace, builtin: dict) -> dict:
    """Merge option sources (see module docstring)."""
    layered = dict(builtin)
    config_path = getattr(args, "config", None)
    if config_path:
        layered.update(read_config_file(config_path))
    manifest_path = getattr(args, "from_manifest", None)
    if manifest_path:
        manifest = mio.read_manifest(manifest_path)
        layered.update(manifest.get("config", {}))
    for key, value in vars(args).items():
        if key in ("config", "from_manifest", "func"):
            continue
        if value is not None:
            layered[key] = value
    return layered


def _coerce(value, kind):
    if value is None:
        return None
    if kind is bool and isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "on")
    return kind(value)


def _canon_square(mat: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return mat[np.ix_(perm, perm)]


def _user_square(mat: np.ndarray, perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return mat[np.ix_(inv, inv)]


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    cfg = resolve(args, {
        "n": 200, "p": 100, "q": 4, "q_binary": None, "structure": "ar1",
        "regime": "uniform", "density": 0.3, "seed": 0, "rewire_prob": 0.1,
        "out": None,
    })
    if cfg["out"] is None:
        raise UsageError("--out is required")
    structure = parse_structures(cfg["structure"])
    regime = parse_regimes(cfg["regime"])
    if len(structure) != 1 or len(regime) != 1:
        raise UsageError("simulate takes exactly one structure and one regime")
    n = _coerce(cfg["n"], int)
    p = _coerce(cfg["p"], int)
    q = _coerce(cfg["q"], int)
    q_binary = _coerce(cfg["q_binary"], int)
    seed = _coerce(cfg["seed"], int)
    density = _coerce(cfg["density"], float)
    rewire = _coerce(cfg["rewire_prob"], float)

    x_raw, Y, b_true, omega_true, kinds = simulate_dataset(
        n=n, p=p, q=q, structure=OmegaStructure(structure[0]),
        regime=SignalRegime(regime[0]), q_binary=q_binary,
        density=density, seed=seed, rewire_prob=rewire,
    )
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    mio.write_matrix(os.path.join(out, "X.csv"), x_raw)
    mio.write_matrix(os.path.join(out, "Y.csv"), Y)
    mio.write_matrix(os.path.join(out, "truth_B.csv"), b_true)
    mio.write_matrix(os.path.join(out, "truth_Omega.csv"), omega_true)
    mio.write_kinds(os.path.join(out, "kinds.csv"), kinds)
    mio.write_manifest(
        os.path.join(out, "manifest.json"), "simulate",
        {"n": n, "p": p, "q": q, "q_binary": q_binary,
         "structure": structure[0], "regime": regime[0], "density": density,
         "seed": seed, "rewire_prob": rewire, "out": str(out)},
    )
    print(f"wrote simulated dataset to {out}")
    return 0


# --------------------------------------------------------------------- fit

def cmd_fit(args) -> int:
    cfg = resolve(args, {
        "x": None, "y": None, "kinds": None, "out": None,
        "lambda0_grid": None, "xi0_grid": None, "lambda1": None, "xi1": None,
        "H": 2000, "seed": 0, "burn_in": 50, "thin": 1,
        "sweep_tol": 1e-4, "tol": 1e-3, "max_outer": 100, "min_iter": 5,
        "h_schedule": None,
    })
    for key in ("x", "y", "kinds", "out"):
        if cfg[key] is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")

    X_raw = mio.read_matrix(cfg["x"], "X")
    Y_raw = mio.read_matrix(cfg["y"], "Y")
    kinds = mio.read_kinds(cfg["kinds"])
    dataset = Dataset.from_raw(X_raw, Y_raw, kinds)

    lambda0_grid = parse_grid(cfg["lambda0_grid"]) if cfg["lambda0_grid"] else None
    xi0_grid = parse_grid(cfg["xi0_grid"]) if cfg["xi0_grid"] else None
    hyper = default_hyperparameters(
        n=dataset.n, p=dataset.p, q=dataset.q,
        H=_coerce(cfg["H"], int),
        lambda0_grid=lambda0_grid, xi0_grid=xi0_grid,
        lambda1=_coerce(cfg["lambda1"], float),
        xi1=_coerce(cfg["xi1"], float),
        tol=_coerce(cfg["sweep_tol"], float),
    )
    h_schedule = ()
    if cfg["h_schedule"]:
        h_schedule = tuple(int(v) for v in str(cfg["h_schedule"]).split(","))
    fit_cfg = FitConfig(
        hyper=hyper,
        global_seed=_coerce(cfg["seed"], int),
        convergence=Convergence(
            max_outer=_coerce(cfg["max_outer"], int),
            tol=_coerce(cfg["tol"], float),
            min_iter=_coerce(cfg["min_iter"], int),
        ),
        burn_in=_coerce(cfg["burn_in"], int),
        thin=_coerce(cfg["thin"], int),
        h_schedule=h_schedule,
    )

    start = time.perf_counter()
    path = fit_path(dataset, fit_cfg)
    fit_seconds = time.perf_counter() - start

    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    est = path.default_estimate
    perm = dataset.user_to_canonical
    mio.write_matrix(os.path.join(out, "B_hat.csv"), dataset.to_user_columns(est.B))
    mio.write_matrix(os.path.join(out, "Omega_hat.csv"), _user_square(est.Omega, perm))
    with open(os.path.join(out, "path_diagnostics.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "lambda0", "xi0", "iterations", "converged",
                         "objective", "b_support", "omega_support",
                         "h_effective", "sampler_fallbacks"])
        for idx, diag in enumerate(path.diagnostics):
            writer.writerow([
                idx, mio.FLOAT_FMT % diag.lambda0, mio.FLOAT_FMT % diag.xi0,
                diag.iterations, int(diag.converged), mio.FLOAT_FMT % diag.objective,
                diag.b_support, diag.omega_support, diag.h_effective,
                diag.sampler_fallbacks,
            ])
    mio.write_timings(os.path.join(out, "timings.json"), {"fit_seconds": fit_seconds})
    mio.write_manifest(
        os.path.join(out, "manifest.json"), "fit",
        {"x": str(cfg["x"]), "y": str(cfg["y"]), "kinds": str(cfg["kinds"]),
         "out": str(out),
         "lambda0_grid": [float(v) for v in hyper.lambda0_grid],
         "xi0_grid": [float(v) for v in hyper.xi0_grid],
         "lambda1": hyper.lambda1, "xi1": hyper.xi1, "H": hyper.H,
         "seed": fit_cfg.global_seed, "burn_in": fit_cfg.burn_in,
         "thin": fit_cfg.thin, "sweep_tol": hyper.tol,
         "tol": fit_cfg.convergence.tol,
         "max_outer": fit_cfg.convergence.max_outer,
         "min_iter": fit_cfg.convergence.min_iter,
         "h_schedule": list(h_schedule)},
        inputs={"x": cfg["x"], "y": cfg["y"], "kinds": cfg["kinds"]},
    )
    print(f"wrote estimates to {out} ({len(path.grid)} grid points, "
          f"{fit_seconds:.1f}s)")
    return 0


# ---------------------------------------------------------------- evaluate

def _evaluate_one(b_hat, omega_hat, cfg, test, truth_b, truth_omega, perm) -> dict:
    row = {c: None for c in EVAL_COLUMNS}
    screen_c = _coerce(cfg["sure_screen_c"], float)
    b_pattern = b_hat
    if screen_c is not None and omega_hat is not None:
        screen_n = _coerce(cfg["sure_screen_n"], int)
        if screen_n is None:
            raise UsageError("--sure-screen-c needs --sure-screen-n (training sample size)")
        b_pattern = np.where(
            sure_screen(b_hat, omega_hat, screen_n, b_hat.shape[0], screen_c),
            b_hat, 0.0,
        )
    if truth_b is not None:
        rep = support_metrics(b_pattern, truth_b)
        row.update(b_sen=rep.sensitivity, b_spec=rep.specificity,
                   b_prec=rep.precision, b_acc=rep.accuracy)
    if truth_omega is not None and omega_hat is not None:
        rep = support_metrics(upper_triangle(omega_hat), upper_triangle(truth_omega))
        row.update(omega_sen=rep.sensitivity, omega_spec=rep.specificity,
                   omega_prec=rep.precision, omega_acc=rep.accuracy)
    if test is not None and omega_hat is not None:
        b_canon = b_hat[:, perm]
        omega_canon = _canon_square(omega_hat, perm)
        state = ModelState(B=b_canon, Omega=omega_canon, theta=0.5, eta=0.5)
        pred = predictive_scores(test, state, seed=_coerce(cfg["seed"], int),
                                 n_draws=_coerce(cfg["rmse_draws"], int))
        row.update(rmse=pred["rmse"], rmse_meanpred=pred["rmse_mean_prediction"],
                   auc=pred["auc"])
        if truth_b is not None and truth_omega is not None:
            row["rfe"] = regression_function_error(
                test.X, b_canon, omega_canon,
                truth_b[:, perm], _canon_square(truth_omega, perm), test.kinds,
            )
    return row


def cmd_evaluate(args) -> int:
    cfg = resolve(args, {
        "b_hat": None, "omega_hat": None, "truth_b": None, "truth_omega": None,
        "test_x": None, "test_y": None, "kinds": None, "out": None,
        "seed": 0, "rmse_draws": 1, "sure_screen_c": None, "sure_screen_n": None,
        "time_seconds": None,
        "replicates": None,
    })
    if cfg["out"] is None:
        raise UsageError("--out is required")
    if cfg["b_hat"] is None and cfg["replicates"] is None:
        raise UsageError("need --b-hat or --replicates")

    truth_b = mio.read_matrix(cfg["truth_b"], "truth_B") if cfg["truth_b"] else None
    truth_omega = mio.read_matrix(cfg["truth_omega"], "truth_Omega") if cfg["truth_omega"] else None

    test = None
    perm = None
    if cfg["test_x"] and cfg["test_y"] and cfg["kinds"]:
        kinds = mio.read_kinds(cfg["kinds"])
        test = Dataset.from_raw(
            mio.read_matrix(cfg["test_x"], "test X"),
            mio.read_matrix(cfg["test_y"], "test Y"),
            kinds,
        )
        perm = test.user_to_canonical

    estimate_dirs = []
    if cfg["replicates"]:
        root = cfg["replicates"]
        estimate_dirs = [
            os.path.join(root, d) for d in sorted(os.listdir(root))
            if os.path.isdir(os.path.join(root, d))
        ]
        if not estimate_dirs:
            raise DataValidationError([f"no replicate subdirectories in {root}"])

    rows = []
    labels = []
    if estimate_dirs:
        for d in estimate_dirs:
            b_hat = mio.read_matrix(os.path.join(d, "B_hat.csv"), "B_hat")
            om_path = os.path.join(d, "Omega_hat.csv")
            omega_hat = mio.read_matrix(om_path, "Omega_hat") if os.path.exists(om_path) else None
            rows.append(_evaluate_one(b_hat, omega_hat, cfg, test, truth_b, truth_omega, perm))
            labels.append(os.path.basename(d))
    else:
        b_hat = mio.read_matrix(cfg["b_hat"], "B_hat")
        omega_hat = mio.read_matrix(cfg["omega_hat"], "Omega_hat") if cfg["omega_hat"] else None
        rows.append(_evaluate_one(b_hat, omega_hat, cfg, test, truth_b, truth_omega, perm))
        labels.append("estimate")

    time_s = _coerce(cfg["time_seconds"], float)
    for row in rows:
        row["time_s"] = time_s

    with open(cfg["out"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + EVAL_COLUMNS)
        for label, row in zip(labels, rows):
            writer.writerow([label] + [mio.format_metric(row[c]) for c in EVAL_COLUMNS])
        if len(rows) > 1:
            means = []
            for col in EVAL_COLUMNS:
                vals = [r[col] for r in rows if r[col] is not None]
                means.append(float(np.mean(vals)) if vals else None)
            writer.writerow(["mean"] + [mio.format_metric(v) for v in means])
    out_dir = os.path.dirname(os.path.abspath(cfg["out"])) or "."
    mio.write_manifest(
        os.path.join(out_dir, "manifest.json"), "evaluate",
        {key: (str(v) if v is not None else None) for key, v in cfg.items()},
    )
    print(f"wrote metrics to {cfg['out']}")
    return 0


# --------------------------------------------------------------- benchmark

def cmd_benchmark(args) -> int:
    cfg = resolve(args, {
        "out": None, "structures": "ar1", "regimes": "uniform",
        "replicates": 10, "n": 200, "p": 100, "q": 4, "q_binary": None,
        "density": 0.3, "H": 100, "seed": 0, "workers": 1,
        "lambda0_grid": None, "xi0_grid": None,
        "max_outer": 100, "tol": 1e-3, "min_iter": 5,
        "burn_in": 50, "thin": 1, "rmse_draws": 1,
    })
    if cfg["out"] is None:
        raise UsageError("--out is required")
    bench = BenchmarkConfig(
        n=_coerce(cfg["n"], int), p=_coerce(cfg["p"], int), q=_coerce(cfg["q"], int),
        q_binary=_coerce(cfg["q_binary"], int),
        structures=parse_structures(cfg["structures"]),
        regimes=parse_regimes(cfg["regimes"]),
        replicates=_coerce(cfg["replicates"], int),
        density=_coerce(cfg["density"], float),
        H=_coerce(cfg["H"], int),
        seed=_coerce(cfg["seed"], int),
        workers=_coerce(cfg["workers"], int),
        lambda0_grid=parse_grid(cfg["lambda0_grid"]) if cfg["lambda0_grid"] else (),
        xi0_grid=parse_grid(cfg["xi0_grid"]) if cfg["xi0_grid"] else (),
        max_outer=_coerce(cfg["max_outer"], int),
        tol=_coerce(cfg["tol"], float),
        min_iter=_coerce(cfg["min_iter"], int),
        burn_in=_coerce(cfg["burn_in"], int),
        thin=_coerce(cfg["thin"], int),
        rmse_draws=_coerce(cfg["rmse_draws"], int),
    )
    results = run_benchmark(bench, cfg["out"])
    failures = sum(1 for r in results if r.error is not None)
    print(f"benchmark complete: {len(results) - failures} ok, {failures} failed; "
          f"results in {cfg['out']}")
    return 0


# -------------------------------------------------------------------- main

def build_parser() -> _Parser:
    parser = _Parser(prog="mixedssl",
                     description="Sparse mixed-outcome multivariate regression "
                                 "via spike-and-slab LASSO MAP estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--from-manifest", help="replay a previous run's manifest")
        p.add_argument("--seed", type=int)

    sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    add_common(sim)
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--q", type=int)
    sim.add_argument("--q-binary", type=int)
    sim.add_argument("--structure")
    sim.add_argument("--regime")
    sim.add_argument("--density", type=float)
    sim.add_argument("--rewire-prob", type=float)
    sim.add_argument("--out")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit the model to CSV data")
    add_common(fit)
    fit.add_argument("--x")
    fit.add_argument("--y")
    fit.add_argument("--kinds")
    fit.add_argument("--out")
    fit.add_argument("--lambda0-grid")
    fit.add_argument("--xi0-grid")
    fit.add_argument("--lambda1", type=float)
    fit.add_argument("--xi1", type=float)
    fit.add_argument("--H", type=int, dest="H")
    fit.add_argument("--burn-in", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--sweep-tol", type=float)
    fit.add_argument("--tol", type=float)
    fit.add_argument("--max-outer", type=int)
    fit.add_argument("--min-iter", type=int)
    fit.add_argument("--h-schedule")
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("evaluate", help="score estimates against truth/test data")
    add_common(ev)
    ev.add_argument("--b-hat")
    ev.add_argument("--omega-hat")
    ev.add_argument("--truth-b")
    ev.add_argument("--truth-omega")
    ev.add_argument("--test-x")
    ev.add_argument("--test-y")
    ev.add_argument("--kinds")
    ev.add_argument("--rmse-draws", type=int)
    ev.add_argument("--sure-screen-c", type=float)
    ev.add_argument("--sure-screen-n", type=int)
    ev.add_argument("--time-seconds", type=float)
    ev.add_argument("--replicates")
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_evaluate)

    bench = sub.add_parser("benchmark", help="simulate/fit/evaluate over replicates")
    add_common(bench)
    bench.add_argument("--structures")
    bench.add_argument("--regimes")
    bench.add_argument("--replicates", type=int)
    bench.add_argument("--n", type=int)
    bench.add_argument("--p", type=int)
    bench.add_argument("--q", type=int)
    bench.add_argument("--q-binary", type=int)
    bench.add_argument("--density", type=float)
    bench.add_argument("--H", type=int, dest="H")
    bench.add_argument("--workers", type=int)
    bench.add_argument("--lambda0-grid")
    bench.add_argument("--xi0-grid")
    bench.add_argument("--max-outer", type=int)
    bench.add_argument("--tol", type=float)
    bench.add_argument("--min-iter", type=int)
    bench.add_argument("--burn-in", type=int)
    bench.add_argument("--thin", type=int)
    bench.add_argument("--rmse-draws", type=int)
    bench.add_argument("--out")
    bench.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (DataValidationError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except (NotPositiveDefiniteError, ConditioningError, DivergenceError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_EXIT


if __name__ == "__main__":
    sys.exit(main())
