import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mixedssl.metrics import (
    mann_whitney_auc,
    predictive_scores,
    regression_function_error,
    support_metrics,
    sure_screen,
    upper_triangle,
)
from mixedssl.errors import InputShapeError
from mixedssl.types import Dataset, ModelState, OutcomeKind

C = OutcomeKind.CONTINUOUS
B = OutcomeKind.BINARY


class TestSupportMetrics:
    def test_perfect_recovery(self):
        pattern = np.array([[1.0, 0.0], [0.0, 2.0]])
        rep = support_metrics(pattern, pattern)
        assert (rep.sensitivity, rep.specificity, rep.precision, rep.accuracy) == (1, 1, 1, 1)

    def test_dense_truth_specificity_absent(self):
        truth = np.ones((3, 3))
        rep = support_metrics(np.ones((3, 3)), truth)
        assert rep.specificity is None
        assert rep.sensitivity == 1.0

    def test_empty_estimate(self):
        truth = np.zeros(10)
        truth[:3] = 1.0
        rep = support_metrics(np.zeros(10), truth)
        assert rep.sensitivity == 0.0
        assert rep.specificity == 1.0
        assert rep.accuracy == pytest.approx(0.7)
        assert rep.precision is None

    def test_shape_mismatch(self):
        with pytest.raises(InputShapeError):
            support_metrics(np.zeros(3), np.zeros(4))

    @given(st.integers(0, 10000))
    @settings(max_examples=30, deadline=None)
    def test_permutation_equivariance(self, seed):
        rng = np.random.default_rng(seed)
        est = rng.random((4, 5)) < 0.4
        tru = rng.random((4, 5)) < 0.3
        rows = rng.permutation(4)
        cols = rng.permutation(5)
        a = support_metrics(est, tru)
        b = support_metrics(est[np.ix_(rows, cols)], tru[np.ix_(rows, cols)])
        assert (a.tp, a.fp, a.tn, a.fn) == (b.tp, b.fp, b.tn, b.fn)


class TestRegressionFunctionError:
    def test_zero_at_truth(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((20, 3))
        b = rng.standard_normal((3, 2))
        omega = np.eye(2)
        assert regression_function_error(x, b, omega, b, omega, [C, B]) == 0.0

    def test_binary_scale_free_at_zero_mean(self):
        # both models predict Phi(0) = 1/2 regardless of latent scale
        x = np.zeros((5, 2))
        b = np.zeros((2, 1))
        assert regression_function_error(
            x, b, np.array([[4.0]]), b, np.array([[0.25]]), [B]
        ) == 0.0

    def test_constant_shift_continuous(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((50, 3))
        b_true = rng.standard_normal((3, 1))
        delta = np.array([[0.5], [-1.0], [0.25]])
        omega = np.eye(1)
        got = regression_function_error(x, b_true + delta, omega, b_true, omega, [C])
        expected = np.mean(np.abs(x @ delta[:, 0]))
        assert got == pytest.approx(expected, rel=1e-12)


class TestAuc:
    def test_perfect_separation(self):
        scores = np.array([0.1, 0.2, 0.8, 0.9])
        labels = np.array([0.0, 0.0, 1.0, 1.0])
        assert mann_whitney_auc(scores, labels) == 1.0

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(2)
        scores = rng.random(20000)
        labels = (rng.random(20000) < 0.5).astype(float)
        assert abs(mann_whitney_auc(scores, labels) - 0.5) < 0.02

    def test_degenerate_labels_absent(self):
        assert mann_whitney_auc(np.array([0.1, 0.9]), np.array([1.0, 1.0])) is None

    def test_ties_averaged(self):
        scores = np.array([0.5, 0.5, 0.5, 0.5])
        labels = np.array([0.0, 1.0, 0.0, 1.0])
        assert mann_whitney_auc(scores, labels) == pytest.approx(0.5)

    @given(st.integers(0, 10000), st.floats(0.1, 5.0), st.floats(-3, 3))
    @settings(max_examples=30, deadline=None)
    def test_monotone_transform_invariance(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        scores = rng.standard_normal(40)
        labels = (rng.random(40) < 0.5).astype(float)
        if labels.min() == labels.max():
            return
        base = mann_whitney_auc(scores, labels)
        transformed = mann_whitney_auc(np.tanh(scale * scores) + shift, labels)
        assert transformed == pytest.approx(base, abs=1e-12)


class TestPredictiveScores:
    def _dataset(self, n=4000, seed=3):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, 3))
        b = np.array([[1.5], [-1.0], [0.5]])
        from mixedssl.types import standardize

        xs, _, _ = standardize(x)
        y = xs @ b + rng.standard_normal((n, 1))
        return Dataset.from_raw(x, y, [C]), b

    def test_mean_prediction_rmse_near_residual_sd(self):
        ds, b = self._dataset()
        state = ModelState(B=b, Omega=np.eye(1), theta=0.5, eta=0.5)
        scores = predictive_scores(ds, state, seed=0)
        assert scores["rmse_mean_prediction"] == pytest.approx(1.0, abs=0.05)
        # a single simulated draw doubles the error variance
        assert scores["rmse"] == pytest.approx(math.sqrt(2.0), abs=0.07)

    def test_many_draws_approach_mean_prediction(self):
        ds, b = self._dataset(seed=4)
        state = ModelState(B=b, Omega=np.eye(1), theta=0.5, eta=0.5)
        scores = predictive_scores(ds, state, seed=1, n_draws=400)
        assert scores["rmse"] == pytest.approx(scores["rmse_mean_prediction"], rel=0.02)

    def test_strong_binary_signal_high_auc(self):
        rng = np.random.default_rng(5)
        n = 2000
        x = rng.standard_normal((n, 2))
        b = np.array([[2.0], [-2.0]])
        from mixedssl.types import standardize

        xs, _, _ = standardize(x)
        z = xs @ b + rng.standard_normal((n, 1))
        y = (z >= 0).astype(float)
        ds = Dataset.from_raw(x, y, [B])
        state = ModelState(B=b, Omega=np.eye(1), theta=0.5, eta=0.5)
        scores = predictive_scores(ds, state, seed=2)
        assert scores["auc"] > 0.9
        assert scores["rmse"] is None

    def test_degenerate_binary_column_absent(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((30, 2))
        y = np.ones((30, 1))
        ds = Dataset.from_raw(x, y, [B])
        state = ModelState(B=np.zeros((2, 1)), Omega=np.eye(1), theta=0.5, eta=0.5)
        assert predictive_scores(ds, state, seed=3)["auc"] is None


class TestSureScreen:
    def test_threshold_value(self):
        # c=1, n=100, p=10: a_n = sqrt(ln(10)/1e4)
        a_n = math.sqrt(math.log(10.0) / (100 * 100))
        assert a_n == pytest.approx(0.0151743, abs=1e-6)
        b = np.zeros((10, 1))
        b[0, 0] = a_n * 1.01
        b[1, 0] = a_n * 0.99
        kept = sure_screen(b, np.eye(1), n=100, p=10, c=1.0)
        assert kept[0, 0] and not kept[1, 0]

    def test_zero_matrix(self):
        assert not sure_screen(np.zeros((5, 2)), np.eye(2), 100, 5, 1.0).any()

    def test_omega_scaling(self):
        # a_n at (n=100, p=4, c=1) is ~0.0294; 0.05 clears it only at unit omega
        b = np.full((4, 2), 0.05)
        small = sure_screen(b, np.diag([1.0, 1.0]), 100, 4, 1.0)
        large = sure_screen(b, np.diag([1.0, 100.0]), 100, 4, 1.0)
        assert small[:, 1].all() and not large[:, 1].any()

    def test_monotone_in_c(self):
        rng = np.random.default_rng(7)
        b = rng.standard_normal((20, 3)) * 0.05
        omega = np.eye(3)
        prev = None
        for c in (0.5, 1.0, 2.0, 4.0):
            kept = sure_screen(b, omega, 200, 20, c)
            if prev is not None:
                assert np.all(kept <= prev)  # support shrinks as c grows
            prev = kept


def test_upper_triangle():
    m = np.arange(9.0).reshape(3, 3)
    assert upper_triangle(m).tolist() == [1.0, 2.0, 5.0]
