from mixedssl.benchmark import BenchmarkConfig, run_benchmark, split_train_test
from mixedssl.simulate import simulate_dataset


def small_config(**overrides):
    base = dict(n=40, p=6, q=2, structures=("ar1",), regimes=("uniform",),
                replicates=3, H=10, seed=5, workers=1,
                lambda0_grid=(20.0, 50.0), xi0_grid=(8.0,),
                max_outer=4, burn_in=10)
    base.update(overrides)
    return BenchmarkConfig(**base)


def test_row_counts_and_aggregate(tmp_path):
    cfg = small_config(structures=("ar1", "star"), replicates=3)
    out = tmp_path / "res"
    results = run_benchmark(cfg, out)
    assert len(results) == 6
    rows = (out / "results.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 6
    agg = (out / "aggregate.csv").read_text().strip().splitlines()
    assert len(agg) == 1 + 2  # one aggregate row per structure x regime
    assert not (out / "errors.csv").exists()
    assert (out / "manifest.json").exists()
    assert (out / "timings.json").exists()


def test_failures_quarantined_run_continues(tmp_path):
    # ar2 needs q >= 3; with q=2 every ar2 replicate fails but ar1 completes
    cfg = small_config(structures=("ar1", "ar2"), replicates=2)
    out = tmp_path / "res"
    results = run_benchmark(cfg, out)
    failed = [r for r in results if r.error is not None]
    ok = [r for r in results if r.error is None]
    assert len(failed) == 2 and all(r.structure == "ar2" for r in failed)
    assert len(ok) == 2
    err_rows = (out / "errors.csv").read_text().strip().splitlines()
    assert len(err_rows) == 1 + 2
    assert "ParameterError" in err_rows[1]
    res_rows = (out / "results.csv").read_text().strip().splitlines()
    assert len(res_rows) == 1 + 2


def test_split_sizes_and_disjointness():
    x, y, b, om, kinds = simulate_dataset(n=30, p=4, q=2, seed=9)
    train, test = split_train_test(x, y, kinds, 20, seed=(1, 2))
    assert train.n == 20
    assert test.n == 10


def test_worker_pool_matches_serial(tmp_path):
    cfg1 = small_config(workers=1)
    cfg2 = small_config(workers=3)
    out1 = tmp_path / "serial"
    out2 = tmp_path / "pool"
    run_benchmark(cfg1, out1)
    run_benchmark(cfg2, out2)
    assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()
    assert (out1 / "aggregate.csv").read_bytes() == (out2 / "aggregate.csv").read_bytes()
