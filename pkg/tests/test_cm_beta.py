import math

import numpy as np
import pytest

from mixedssl.cm_beta import (
    BetaWorkspace,
    cm1_objective,
    cm_step_beta,
    kkt_violations,
    score,
    score_matrix,
    threshold_delta,
    update_beta_entry,
    update_theta,
)
from mixedssl.estep import slab_probability, update_penalties
from mixedssl.types import Hyperparameters, LatentDraws, ModelState
from conftest import mixed_dataset


def reference_lasso(X, y, penalty, tol=1e-14, max_iter=50000):
    """Independent coordinate-descent lasso oracle:
    minimize 0.5 ||y - X b||^2 + penalty * ||b||_1 (columns of X have norm
    sqrt(n))."""
    n, p = X.shape
    b = np.zeros(p)
    r = y - X @ b
    for _ in range(max_iter):
        biggest = 0.0
        for j in range(p):
            s = X[:, j] @ r + n * b[j]
            new = math.copysign(max(abs(s) - penalty, 0.0), s) / n
            if new != b[j]:
                r -= X[:, j] * (new - b[j])
                biggest = max(biggest, abs(new - b[j]))
                b[j] = new
        if biggest < tol:
            break
    return b


class TestScore:
    def test_single_coordinate_case(self):
        # n rows, p=1, q=1, B=0: S = sum_i x_i z_i; engineered so S = 2
        ds, _ = mixed_dataset(n=4, p=1, q_c=1, q_b=0, seed=0)
        B = np.zeros((1, 1))
        zbar = 2.0 * ds.X / ds.n  # then X' zbar = 2 ||x||^2 / n = 2
        ws = BetaWorkspace.build(ds, B, zbar)
        assert score(0, 0, ws, B, np.eye(1), ds.n, 1) == pytest.approx(2.0, rel=1e-12)

    def test_zero_residual_zero_coefficient(self):
        ds, b = mixed_dataset(n=20, p=5, q_c=2, q_b=0, seed=1)
        B = np.zeros((5, 2))
        ws = BetaWorkspace.build(ds, B, np.zeros((20, 2)))
        omega = np.array([[1.5, 0.3], [0.3, 1.0]])
        for j in range(5):
            for k in range(2):
                assert score(j, k, ws, B, omega, ds.n, 1) == 0.0

    def test_identity_precision_is_partial_residual_score(self):
        ds, b = mixed_dataset(n=30, p=6, q_c=1, q_b=0, seed=2)
        rng = np.random.default_rng(3)
        B = rng.standard_normal((6, 1)) * 0.5
        zbar = rng.standard_normal((30, 1))
        ws = BetaWorkspace.build(ds, B, zbar)
        j = 2
        partial = zbar[:, 0] - ds.X @ B[:, 0] + ds.X[:, j] * B[j, 0]
        expected = float(ds.X[:, j] @ partial)
        assert score(j, 0, ws, B, np.eye(1), ds.n, 1) == pytest.approx(expected, rel=1e-10)


class TestThresholdDelta:
    def test_single_laplace_limit(self):
        # lambda0 == lambda1: pure soft threshold level lambda1 / (nH omega)
        theta = 0.4
        p0 = slab_probability(0.0, 2.0, 2.0, theta)
        assert threshold_delta(p0, 2.0, 2.0, omega_kk=1.5, nH=300.0) == pytest.approx(
            2.0 / (300.0 * 1.5)
        )

    def test_fallback_branch_equals_soft_level(self):
        # theta=.5, lam1=1, lam0=50, d=1000: gap condition fails, gate inert
        p0 = slab_probability(0.0, 1.0, 50.0, 0.5)
        lam_star0 = 1.0 * p0 + 50.0 * (1 - p0)
        got = threshold_delta(p0, 1.0, 50.0, omega_kk=1.0, nH=1000.0)
        assert got == pytest.approx(lam_star0 / 1000.0, rel=1e-12)

    def test_refined_branch_matches_global_mode_oracle(self):
        # d=100 activates the gap condition; the refined gate must agree with
        # a brute-force scan for where the 1-D posterior mode leaves zero
        theta, lam1, lam0, d = 0.5, 1.0, 50.0, 100.0
        p0 = slab_probability(0.0, lam1, lam0, theta)
        got = threshold_delta(p0, lam1, lam0, omega_kk=1.0, nH=d)
        expected = (math.sqrt(2 * d * math.log(1 / p0)) + lam1) / d
        assert got == pytest.approx(expected, rel=1e-12)

        def log_prior(b):
            return np.logaddexp(math.log(theta * lam1 / 2) - lam1 * np.abs(b),
                                math.log((1 - theta) * lam0 / 2) - lam0 * np.abs(b))

        grid = np.linspace(-3, 3, 200001)
        def mode_is_nonzero(s):
            vals = s * grid - 0.5 * d * grid ** 2 + log_prior(grid)
            return vals.max() > log_prior(0.0) + 1e-9

        eps = 0.02
        assert not mode_is_nonzero((got - eps) * d)
        assert mode_is_nonzero((got + eps) * d)

    def test_omega_scaling_in_fallback(self):
        p0 = slab_probability(0.0, 1.0, 50.0, 0.5)
        one = threshold_delta(p0, 1.0, 50.0, omega_kk=1.0, nH=1000.0)
        two = threshold_delta(p0, 1.0, 50.0, omega_kk=2.0, nH=1000.0)
        assert two == pytest.approx(one / 2.0)


class TestUpdateBetaEntry:
    def test_soft_threshold_survives(self):
        assert update_beta_entry(5.0, 2.0, 1.0, 1.0, 1.0) == pytest.approx(3.0)

    def test_below_soft_threshold(self):
        assert update_beta_entry(1.5, 2.0, 0.0, 1.0, 1.0) == 0.0

    def test_hard_gate_kills(self):
        assert update_beta_entry(5.0, 2.0, 10.0, 1.0, 1.0) == 0.0

    def test_randomized_table_matches_hand_formula(self):
        rng = np.random.default_rng(99)
        checked_zero = checked_nonzero = 0
        for _ in range(50):
            s = rng.uniform(-20, 20)
            lam = rng.uniform(0.0, 10.0)
            omega = rng.uniform(0.2, 3.0)
            nH = float(rng.integers(1, 500))
            delta = rng.uniform(0.0, 2.0 * abs(s) / (nH * omega) + 0.01)
            got = update_beta_entry(s, lam, delta, omega, nH)
            soft = max(abs(s) - lam, 0.0)
            if soft > 0.0 and abs(s) / (nH * omega) > delta:
                expected = math.copysign(soft, s) / (nH * omega)
                assert got == pytest.approx(expected, rel=1e-12)
                checked_nonzero += 1
            else:
                assert got == 0.0
                checked_zero += 1
        assert checked_zero > 5 and checked_nonzero > 5


class TestUpdateTheta:
    def test_symmetric_posterior(self):
        assert update_theta(6.0, 1.0, 1.0, 12) == pytest.approx(0.5)

    def test_clipped_low(self):
        assert update_theta(0.0, 1.0, 100.0, 10) == pytest.approx(1e-8)


class TestCmStepBeta:
    def _setup(self, seed=0, lam1=0.05, lam0=20.0, q_c=2):
        ds, b_true = mixed_dataset(n=60, p=8, q_c=q_c, q_b=0, seed=seed)
        hyper = Hyperparameters(lambda1=lam1, lambda0=lam0, xi1=0.6, xi0=6.0, tol=1e-10)
        rng = np.random.default_rng(seed + 10)
        zbar = ds.X @ b_true + rng.standard_normal((ds.n, q_c)) / math.sqrt(ds.n)
        draws = LatentDraws(draws=zbar[None])
        state = ModelState(B=np.zeros((8, q_c)), Omega=np.eye(q_c), theta=0.3, eta=0.3)
        return ds, b_true, hyper, draws, state

    def test_theta_closed_form(self):
        ds, b_true, hyper, draws, state = self._setup()
        pen = update_penalties(state, hyper)
        _, theta, _ = cm_step_beta(ds, draws, state, pen, hyper)
        expected = (hyper.a_theta - 1 + pen.sum_p_star) / (
            hyper.a_theta + hyper.b_theta - 2 + ds.p * ds.q
        )
        assert theta == pytest.approx(min(max(expected, 1e-8), 1 - 1e-8))

    def test_stationary_at_truth_with_weak_penalty(self):
        # noise-free responses, slab-dominant penalties: one step moves B by < 1e-8
        ds, b_true = mixed_dataset(n=50, p=6, q_c=2, q_b=0, seed=5, b_scale=4.0)
        b_true[np.abs(b_true) < 2.0] = 0.0  # keep only strong signals
        zbar = ds.X @ b_true
        draws = LatentDraws(draws=zbar[None])
        hyper = Hyperparameters(lambda1=1e-7, lambda0=1e-7, xi1=0.5, xi0=5.0, tol=1e-12)
        state = ModelState(B=b_true, Omega=np.eye(2), theta=0.9, eta=0.5)
        pen = update_penalties(state, hyper)
        B_new, _, _ = cm_step_beta(ds, draws, state, pen, hyper)
        assert np.max(np.abs(B_new - b_true)) < 1e-8

    def test_objective_monotone(self):
        ds, b_true, hyper, draws, state = self._setup(seed=3)
        pen = update_penalties(state, hyper)
        before = cm1_objective(ds, draws, state.B, state.Omega, pen.lambda_star)
        B_new, _, _ = cm_step_beta(ds, draws, state, pen, hyper, debug=True)
        after = cm1_objective(ds, draws, B_new, state.Omega, pen.lambda_star)
        assert after >= before - 1e-8 * max(1.0, abs(before))

    def test_kkt_at_convergence(self):
        ds, b_true, hyper, draws, state = self._setup(seed=7)
        pen = update_penalties(state, hyper)
        B_new, _, info = cm_step_beta(ds, draws, state, pen, hyper)
        assert info["converged"]
        gaps = kkt_violations(ds, draws, B_new, np.asarray(state.Omega), pen, hyper)
        assert gaps["nonzero"] <= 1e-6 * ds.n
        assert gaps["zero"] <= 1e-6 * ds.n

    def test_lasso_equivalence_single_outcome(self):
        # q=1, omega fixed at 1, lambda0 == lambda1: fixed point is the lasso
        ds, b_true = mixed_dataset(n=60, p=10, q_c=1, q_b=0, seed=9)
        rng = np.random.default_rng(1)
        y = ds.X @ b_true + rng.standard_normal((ds.n, 1))
        draws = LatentDraws(draws=y[None])
        lam = 4.0
        hyper = Hyperparameters(lambda1=lam, lambda0=lam, xi1=0.5, xi0=5.0, tol=1e-13)
        state = ModelState(B=np.zeros((10, 1)), Omega=np.eye(1), theta=0.5, eta=0.5)
        pen = update_penalties(state, hyper)
        B_new, _, _ = cm_step_beta(ds, draws, state, pen, hyper)
        ref = reference_lasso(ds.X, y[:, 0], lam)
        assert np.max(np.abs(B_new[:, 0] - ref)) < 1e-6

    def test_diagonal_precision_separates_outcomes(self):
        # lambda0 == lambda1, diagonal Omega: q independent weighted lassos
        ds, b_true = mixed_dataset(n=50, p=7, q_c=2, q_b=0, seed=11)
        rng = np.random.default_rng(2)
        y = ds.X @ b_true + rng.standard_normal((ds.n, 2))
        draws = LatentDraws(draws=y[None])
        lam = 3.0
        omega = np.diag([2.0, 0.5])
        hyper = Hyperparameters(lambda1=lam, lambda0=lam, xi1=0.5, xi0=5.0, tol=1e-13)
        state = ModelState(B=np.zeros((7, 2)), Omega=omega, theta=0.2, eta=0.5)
        pen = update_penalties(state, hyper)
        B_new, _, _ = cm_step_beta(ds, draws, state, pen, hyper)
        for k, w in enumerate((2.0, 0.5)):
            ref = reference_lasso(ds.X, y[:, k], lam / w)
            assert np.max(np.abs(B_new[:, k] - ref)) < 1e-6

    def test_theta_invariance_when_rates_equal(self):
        ds, b_true, hyper, draws, _ = self._setup(lam1=3.0, lam0=3.0)
        outs = []
        for theta in (0.1, 0.9):
            state = ModelState(B=np.zeros((8, 2)), Omega=np.eye(2), theta=theta, eta=0.5)
            pen = update_penalties(state, hyper)
            B_new, _, _ = cm_step_beta(ds, draws, state, pen, hyper)
            outs.append(B_new)
        assert np.array_equal(outs[0], outs[1])

    def test_score_matrix_consistent_with_entrywise(self):
        ds, b_true, hyper, draws, state = self._setup(seed=13)
        rng = np.random.default_rng(5)
        B = rng.standard_normal((8, 2)) * 0.3
        omega = np.array([[1.2, 0.4], [0.4, 0.9]])
        zbar = draws.mean()
        S = score_matrix(ds, zbar, B, omega, 1)
        ws = BetaWorkspace.build(ds, B, zbar)
        for j in range(8):
            for k in range(2):
                assert S[j, k] == pytest.approx(score(j, k, ws, B, omega, ds.n, 1), rel=1e-10)
