"""Learner tests: closed forms, subgradient optimality, brute-force
objective comparison, and the restricted least-squares contract."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momselect.learners import (
    ConvergenceError,
    Erm,
    Estimator,
    InvalidSubspaceError,
    Lasso,
    LearnerError,
    NumericError,
    erm_fit,
    fit_learner,
    kkt_residual,
    lasso_fit,
    lasso_objective,
    predict,
)


def brute_force_objective(x, y, lam, radius, steps=41, rounds=3):
    """Grid-search oracle for the penalized objective, d <= 3 only.

    Coarse-to-fine: minimize over a cubic grid, then re-grid around the
    winner with a shrunken radius.
    """
    d = x.shape[1]
    assert d <= 3
    center = np.zeros(d)
    best_val, best_pt = np.inf, center
    for _ in range(rounds):
        axes = [np.linspace(c - radius, c + radius, steps) for c in center]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        resid = y[None, :] - pts @ x.T
        vals = (resid ** 2).mean(axis=1) + lam * np.abs(pts).sum(axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_pt = float(vals[k]), pts[k]
        center = best_pt
        radius = radius * 2.2 / (steps - 1) * 2
    return best_val


class TestLassoClosedForms:
    def test_zero_solution_at_threshold(self):
        # integer-valued data makes every inner product exactly
        # representable, and power-of-two n makes the threshold
        # arithmetic exact, so equality is testable bit-for-bit
        rng = np.random.default_rng(0)
        n, d = 32, 6
        x = rng.integers(-5, 6, size=(n, d)).astype(float)
        y = rng.integers(-5, 6, size=n).astype(float)
        lam = 2.0 * float(np.max(np.abs(x.T @ y))) / n
        est = lasso_fit(x, y, lam)
        assert np.all(est.beta == 0.0)
        est2 = lasso_fit(x, y, lam * 1.5)
        assert np.all(est2.beta == 0.0)

    def test_nonzero_just_below_threshold(self):
        rng = np.random.default_rng(1)
        n, d = 32, 6
        x = rng.integers(-5, 6, size=(n, d)).astype(float)
        y = rng.integers(-5, 6, size=n).astype(float)
        lam = 2.0 * float(np.max(np.abs(x.T @ y))) / n
        est = lasso_fit(x, y, lam * 0.99)
        assert np.any(est.beta != 0.0)

    def test_zero_solution_above_threshold_float_data(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            n = int(rng.integers(5, 80))
            d = int(rng.integers(1, 12))
            x = rng.standard_normal((n, d))
            y = rng.standard_normal(n)
            lam = 2.0 * float(np.max(np.abs(x.T @ y))) / n * (1.0 + 1e-9)
            est = lasso_fit(x, y, lam)
            assert np.all(est.beta == 0.0)

    def test_one_dimensional_soft_threshold(self):
        # all-ones design, mean(y) = 1, lam = 1 gives beta = 0.5
        y = np.array([0.5, 1.5, 0.0, 2.0])  # mean 1
        x = np.ones((4, 1))
        est = lasso_fit(x, y, 1.0)
        assert est.beta[0] == pytest.approx(0.5, abs=1e-9)

    @given(st.floats(-3, 3), st.floats(0, 4))
    @settings(max_examples=50)
    def test_one_dimensional_formula(self, ybar, lam):
        y = np.full(8, ybar)
        x = np.ones((8, 1))
        est = lasso_fit(x, y, lam)
        expected = np.sign(ybar) * max(0.0, abs(ybar) - lam / 2.0)
        assert est.beta[0] == pytest.approx(expected, abs=1e-8)

    def test_unpenalized_interpolation(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((40, 5))
        beta_true = rng.standard_normal(5)
        y = x @ beta_true
        est = lasso_fit(x, y, 0.0)
        np.testing.assert_allclose(est.beta, beta_true, atol=1e-6)


class TestLassoKkt:
    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_kkt_small_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 60))
        d = int(rng.integers(1, 20))
        x = rng.standard_normal((n, d))
        y = rng.standard_normal(n) * float(rng.uniform(0.5, 5))
        lam = float(np.exp(rng.uniform(-4, 1)))
        est = lasso_fit(x, y, lam)
        assert kkt_residual(x, y, est.beta, lam) <= 1e-6

    def test_objective_monotone_over_sweeps(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((30, 40))
        y = rng.standard_normal(30)
        history: list = []
        lasso_fit(x, y, 0.05, objective_history=history)
        assert len(history) >= 2
        hist = np.array(history)
        assert np.all(hist[1:] <= hist[:-1] + 1e-10 * (1.0 + np.abs(hist[:-1])))

    def test_warm_start_converges_to_same_solution(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((50, 30))
        y = rng.standard_normal(50)
        cold = lasso_fit(x, y, 0.3)
        warm_src = lasso_fit(x, y, 1.0)
        warm = lasso_fit(x, y, 0.3, beta0=warm_src.beta)
        np.testing.assert_allclose(cold.beta, warm.beta, atol=1e-5)

    def test_convergence_error_carries_residual(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((60, 40))
        y = rng.standard_normal(60)
        with pytest.raises(ConvergenceError) as err:
            lasso_fit(x, y, 0.001, max_sweeps=1)
        assert err.value.kkt_residual > 0

    def test_rejects_non_finite(self):
        x = np.ones((8, 2))
        y = np.ones(8)
        y[3] = np.nan
        with pytest.raises(NumericError):
            lasso_fit(x, y, 0.1)

    def test_rejects_negative_lam(self):
        with pytest.raises(LearnerError):
            lasso_fit(np.ones((8, 1)), np.ones(8), -0.1)

    def test_zero_column_gets_zero_coefficient(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((20, 3))
        x[:, 1] = 0.0
        y = rng.standard_normal(20)
        est = lasso_fit(x, y, 0.1)
        assert est.beta[1] == 0.0

    def test_standardize_rescales_scaled_problem(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((40, 5))
        x[:, 2] *= 1000.0
        y = rng.standard_normal(40)
        scale = x.std(axis=0)
        direct = lasso_fit(np.ascontiguousarray(x / scale), y, 0.3)
        via_flag = lasso_fit(x, y, 0.3, standardize=True)
        np.testing.assert_array_equal(via_flag.beta, direct.beta / scale)

    def test_standardize_identity_for_unit_std_columns(self):
        x = np.tile([[1.0, -1.0], [-1.0, 1.0]], (4, 1))  # std exactly 1
        y = np.arange(8.0)
        a = lasso_fit(x, y, 0.2)
        b = lasso_fit(x, y, 0.2, standardize=True)
        np.testing.assert_array_equal(a.beta, b.beta)


class TestLassoBruteForce:
    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_objective_matches_grid_search(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 21))
        d = int(rng.integers(1, 4))
        x = rng.standard_normal((n, d))
        y = rng.standard_normal(n) * 2
        lam = float(np.exp(rng.uniform(-2, 0.5)))
        est = lasso_fit(x, y, lam)
        ours = lasso_objective(x, y, est.beta, lam)
        oracle = brute_force_objective(x, y, lam, radius=3.0)
        assert ours <= oracle + 1e-4


class TestErm:
    def test_exact_recovery_on_support(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((30, 8))
        beta_true = np.zeros(8)
        beta_true[[1, 4]] = [2.0, -1.5]
        y = x @ beta_true
        est = erm_fit(x, y, (1, 4))
        np.testing.assert_allclose(est.beta, beta_true, atol=1e-10)

    def test_rejects_empty_subspace(self):
        with pytest.raises(InvalidSubspaceError):
            erm_fit(np.ones((8, 2)), np.ones(8), ())

    def test_rejects_repeated_indices(self):
        with pytest.raises(InvalidSubspaceError):
            erm_fit(np.ones((8, 3)), np.ones(8), (0, 0))

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidSubspaceError):
            erm_fit(np.ones((8, 3)), np.ones(8), (0, 3))

    def test_orthogonal_response_gives_zero(self):
        x = np.zeros((8, 2))
        x[:4, 0] = 1.0
        x[4:, 1] = 1.0
        y = np.array([1.0, -1.0, 1.0, -1.0, 2.0, -2.0, 2.0, -2.0])
        est = erm_fit(x, y, (0, 1))
        np.testing.assert_allclose(est.beta, 0.0, atol=1e-12)

    def test_normal_equations_residual(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(5, 40))
            d = int(rng.integers(2, 12))
            k = int(rng.integers(1, d + 1))
            sub = tuple(int(v) for v in rng.choice(d, size=k, replace=False))
            x = rng.standard_normal((n, d))
            y = rng.standard_normal(n)
            est = erm_fit(x, y, sub)
            xs = x[:, list(sub)]
            resid = xs.T @ (y - xs @ est.beta[list(sub)])
            assert np.linalg.norm(resid) <= 1e-8 * (1.0 + np.linalg.norm(y))
            off = np.setdiff1d(np.arange(d), np.array(sub))
            assert np.all(est.beta[off] == 0.0)

    def test_min_norm_when_underdetermined(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((4, 10))
        y = rng.standard_normal(4)
        est = erm_fit(x, y, tuple(range(10)))
        assert np.isfinite(est.beta).all()
        resid = x.T @ (y - x @ est.beta)
        assert np.linalg.norm(resid) <= 1e-8 * (1.0 + np.linalg.norm(y))
        # agrees with the pseudoinverse, the canonical minimum-norm solve
        np.testing.assert_allclose(est.beta, np.linalg.pinv(x) @ y, atol=1e-10)

    def test_collinear_columns_min_norm(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal((20, 4))
        x[:, 3] = x[:, 0]  # exact collinearity
        y = rng.standard_normal(20)
        est = erm_fit(x, y, (0, 1, 2, 3))
        np.testing.assert_allclose(est.beta, np.linalg.pinv(x) @ y, atol=1e-10)


class TestPredict:
    def test_zero_estimator(self):
        est = Estimator(beta=np.zeros(3))
        assert predict(est, np.array([1.0, 2.0, 3.0])) == 0.0

    def test_basis_vector(self):
        est = Estimator(beta=np.array([1.0, 0.0]))
        assert predict(est, np.array([3.0, 9.0])) == 3.0

    def test_matrix_input(self):
        est = Estimator(beta=np.array([1.0, 1.0]))
        out = predict(est, np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_array_equal(out, [3.0, 7.0])

    def test_dimension_mismatch(self):
        est = Estimator(beta=np.zeros(3))
        with pytest.raises(LearnerError):
            predict(est, np.zeros(4))

    def test_finite_for_finite_inputs(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((16, 4))
        y = rng.standard_normal(16)
        est = lasso_fit(x, y, 0.2)
        assert np.isfinite(predict(est, x)).all()


class TestFitLearner:
    def test_dispatch_lasso(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((16, 4))
        y = rng.standard_normal(16)
        a = fit_learner(Lasso(lam=0.3), x, y)
        b = lasso_fit(x, y, 0.3)
        np.testing.assert_array_equal(a.beta, b.beta)

    def test_dispatch_erm(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((16, 4))
        y = rng.standard_normal(16)
        a = fit_learner(Erm(subspace=(0, 2)), x, y)
        b = erm_fit(x, y, (0, 2))
        np.testing.assert_array_equal(a.beta, b.beta)

    def test_estimator_rejects_non_finite(self):
        with pytest.raises(NumericError):
            Estimator(beta=np.array([1.0, np.inf]))
