import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedssl.errors import DataValidationError, DegenerateCovariateError, InputShapeError
from mixedssl.types import (
    Dataset,
    Hyperparameters,
    OutcomeKind,
    apply_link,
    canonical_order,
    standardize,
    unstandardize,
    validate_dataset,
)

C = OutcomeKind.CONTINUOUS
B = OutcomeKind.BINARY


class TestApplyLink:
    def test_mixed_pair(self):
        out = apply_link(np.array([1.2, -0.3]), [C, B])
        assert out.tolist() == [1.2, 0.0]

    def test_boundary_zero_maps_to_one(self):
        assert apply_link(np.array([0.0]), [B]).tolist() == [1.0]

    def test_sign_thresholding_canonical(self):
        out = apply_link(np.array([0.5, -4.0, 4.0]), [C, B, B])
        assert out.tolist() == [0.5, 0.0, 1.0]

    def test_length_mismatch(self):
        with pytest.raises(InputShapeError):
            apply_link(np.array([1.0, 2.0]), [C])

    def test_matrix_rows(self):
        out = apply_link(np.array([[1.0, -1.0], [-1.0, 1.0]]), [C, B])
        assert out.tolist() == [[1.0, 0.0], [-1.0, 1.0]]

    def test_idempotent_on_linked_vectors(self):
        z = np.array([0.7, 1.0, 0.0])
        once = apply_link(z, [C, B, B])
        assert apply_link(once, [C, B, B]).tolist() == once.tolist()


class TestStandardize:
    def test_hand_example(self):
        x, centers, scales = standardize(np.array([[1.0], [2.0], [3.0]]))
        expected = math.sqrt(1.5)
        assert np.allclose(x[:, 0], [-expected, 0.0, expected], atol=1e-12)
        assert abs(np.linalg.norm(x[:, 0]) - math.sqrt(3)) < 1e-12

    def test_idempotent(self):
        x0, _, _ = standardize(np.random.default_rng(0).standard_normal((20, 3)))
        x1, _, _ = standardize(x0)
        assert np.max(np.abs(x1 - x0)) < 1e-12

    def test_constant_column_named(self):
        bad = np.column_stack([np.arange(5.0), np.full(5, 5.0)])
        with pytest.raises(DegenerateCovariateError) as err:
            standardize(bad)
        assert err.value.column == 1

    def test_round_trip(self):
        raw = np.random.default_rng(1).uniform(-3, 7, (30, 4))
        x, centers, scales = standardize(raw)
        assert np.max(np.abs(unstandardize(x, centers, scales) - raw)) < 1e-10

    @given(st.integers(2, 40), st.integers(1, 6), st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_properties(self, n, p, seed):
        raw = np.random.default_rng(seed).standard_normal((n, p))
        if np.any(np.ptp(raw, axis=0) == 0):
            return
        x, _, _ = standardize(raw)
        assert np.max(np.abs(x.mean(axis=0))) < 1e-10
        assert np.max(np.abs(np.linalg.norm(x, axis=0) - math.sqrt(n))) < 1e-8


class TestDataset:
    def test_canonical_reordering_round_trip(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((25, 3))
        kinds = [B, C, B, C]
        y = np.column_stack([
            (rng.random(25) < 0.5).astype(float),
            rng.standard_normal(25),
            (rng.random(25) < 0.5).astype(float),
            rng.standard_normal(25),
        ])
        ds = Dataset.from_raw(x, y, kinds)
        assert [k.value for k in ds.kinds] == ["continuous", "continuous", "binary", "binary"]
        # reorder then inverse-reorder is the identity
        assert np.array_equal(ds.to_user_columns(ds.Y), y)
        assert ds.kinds_user_order() == kinds

    def test_binary_value_violation(self):
        x = np.random.default_rng(3).standard_normal((10, 2))
        y = np.ones((10, 1))
        y[4, 0] = 2.0
        with pytest.raises(DataValidationError) as err:
            Dataset.from_raw(x, y, [B])
        assert any("non-binary value at (4,0)" in str(v) for v in err.value.violations)

    def test_row_count_mismatch(self):
        x = np.random.default_rng(4).standard_normal((4, 2))
        y = np.zeros((3, 1))
        with pytest.raises((DataValidationError, InputShapeError)):
            Dataset.from_raw(x, y, [B])

    def test_nan_rejected(self):
        x = np.random.default_rng(5).standard_normal((10, 2))
        y = np.random.default_rng(6).standard_normal((10, 1))
        y[2, 0] = np.nan
        with pytest.raises(DataValidationError):
            Dataset.from_raw(x, y, [C])

    def test_valid_mixed_passes(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((12, 2))
        y = np.column_stack([rng.standard_normal(12), (rng.random(12) < 0.4).astype(float)])
        ds = Dataset.from_raw(x, y, [C, B])
        assert validate_dataset(ds) == []

    def test_canonical_order_permutation(self):
        perm = canonical_order([B, C, B])
        assert perm.tolist() == [1, 0, 2]


class TestHyperparameters:
    def test_equal_rates_allowed(self):
        Hyperparameters(lambda1=2.0, lambda0=2.0, xi1=1.0, xi0=1.0)

    def test_slab_heavier_than_spike_rejected(self):
        with pytest.raises(Exception):
            Hyperparameters(lambda1=3.0, lambda0=2.0, xi1=1.0, xi0=2.0)

    def test_grid_must_increase(self):
        with pytest.raises(Exception):
            Hyperparameters(lambda1=1.0, lambda0=5.0, xi1=1.0, xi0=5.0,
                            lambda0_grid=(5.0, 5.0))

    def test_lambda1_respects_grid(self):
        with pytest.raises(Exception):
            Hyperparameters(lambda1=20.0, lambda0=50.0, xi1=1.0, xi0=5.0,
                            lambda0_grid=(10.0, 50.0))
