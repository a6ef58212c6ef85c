import numpy as np
import pytest

from oracles import normal_equations_fit, soft_threshold_ref
from trendkit import regression as reg
from trendkit.errors import TrendkitError


def random_system(rng, n_samples=50, n_features=5, standardized=True):
    base = rng.normal(size=(n_samples, n_features))
    mix = rng.normal(size=(n_features, n_features)) * 0.5 + np.eye(n_features)
    X = base @ mix
    if standardized:
        X = (X - X.mean(axis=0)) / X.std(axis=0)
    w_true = rng.normal(size=n_features)
    y = X @ w_true + rng.normal(scale=0.3, size=n_samples) + rng.normal()
    return X, y


def lambda_max_threshold(X, y):
    """Smallest penalty that zeroes every weight, evaluated on the
    standardized data exactly as the solver sees it (same centering,
    scaling and per-column dot products, so the bound is bit-exact)."""
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales = np.where(scales > 0, scales, 1.0)
    Xs = (X - means) / scales
    yc = y - y.mean()
    n = len(y)
    return max(abs(float(Xs[:, j] @ yc)) for j in range(X.shape[1])) / n


class TestSoftThreshold:
    def test_shrinks_positive(self):
        assert reg.soft_threshold(5.0, 2.0) == 3.0

    def test_shrinks_to_zero(self):
        assert reg.soft_threshold(-1.0, 2.0) == 0.0

    def test_identity_at_zero_gamma(self):
        for z in (-3.5, -1e-9, 0.0, 2.0, 7.25):
            assert reg.soft_threshold(z, 0.0) == z

    def test_matches_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            z = float(rng.normal(scale=3))
            g = float(abs(rng.normal()))
            assert reg.soft_threshold(z, g) == pytest.approx(soft_threshold_ref(z, g), abs=1e-15)

    def test_negative_gamma_rejected(self):
        with pytest.raises(TrendkitError):
            reg.soft_threshold(1.0, -0.1)


class TestFitLasso:
    def test_lambda_zero_matches_normal_equations(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            X, y = random_system(rng)
            model = reg.fit_lasso(X, y, reg.LassoConfig(lam=0.0))
            w_ref, b_ref = normal_equations_fit(X, y)
            assert np.allclose(model.weights, w_ref, atol=1e-6)
            assert model.intercept == pytest.approx(b_ref, abs=1e-6)

    def test_lambda_max_gives_all_zero_weights(self):
        rng = np.random.default_rng(1)
        X, y = random_system(rng)
        lam_max = lambda_max_threshold(X, y)
        for lam in (lam_max, lam_max * 1.5, lam_max * 10):
            model = reg.fit_lasso(X, y, reg.LassoConfig(lam=lam))
            assert np.all(model.weights == 0.0)
            assert model.intercept == pytest.approx(y.mean())

    def test_single_feature_closed_form(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(5, 60))
            x = rng.normal(size=n)
            x = (x - x.mean()) / x.std()
            y = rng.normal(scale=2.0, size=n)
            lam = float(rng.uniform(0, 1.5))
            model = reg.fit_lasso(x[:, None], y, reg.LassoConfig(lam=lam))
            expected = soft_threshold_ref(float(x @ y) / n, lam) / (float(x @ x) / n)
            assert model.weights[0] == pytest.approx(expected, abs=1e-8)

    def test_constant_target_gives_intercept_only(self):
        X = np.random.default_rng(3).normal(size=(10, 3))
        y = np.full(10, 4.5)
        model = reg.fit_lasso(X, y, reg.LassoConfig(lam=0.1))
        assert np.all(model.weights == 0.0)
        assert model.intercept == 4.5

    def test_non_finite_input_rejected(self):
        X = np.ones((4, 2))
        X[0, 0] = np.nan
        with pytest.raises(TrendkitError, match="non-finite"):
            reg.fit_lasso(X, np.ones(4), reg.LassoConfig())

    def test_too_few_samples(self):
        with pytest.raises(TrendkitError, match="at least 2"):
            reg.fit_lasso(np.ones((1, 2)), np.ones(1), reg.LassoConfig())

    def test_max_sweeps_reported_not_error(self):
        rng = np.random.default_rng(4)
        X, y = random_system(rng)
        model = reg.fit_lasso(X, y, reg.LassoConfig(lam=0.001, max_sweeps=1))
        assert model.n_sweeps == 1
        assert not model.converged


class TestMonotoneDescent:
    def test_recorded_objective_never_increases(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            X, y = random_system(rng, n_samples=int(rng.integers(10, 80)),
                                 n_features=int(rng.integers(1, 8)))
            lam = float(rng.choice([0.0, 1e-3, 1e-2, 0.1, 1.0]))
            model = reg.fit_lasso(X, y, reg.LassoConfig(lam=lam))
            hist = np.array(model.objective_history)
            assert len(hist) >= 1
            assert np.all(np.diff(hist) <= 1e-12)

    def test_history_values_are_objective_evaluations(self):
        # on standardized data the recorded per-sweep values equal the
        # penalized mean squared error of the descended problem, whose
        # regularization coefficient is twice the config lambda
        rng = np.random.default_rng(6)
        X, y = random_system(rng)
        lam = 0.05
        model = reg.fit_lasso(X, y, reg.LassoConfig(lam=lam))
        final = reg.objective(X, y, model.weights, model.intercept, 2 * lam)
        assert model.objective_history[-1] == pytest.approx(final, rel=1e-12)


class TestLassoPath:
    def test_l1_norm_non_increasing_in_lambda(self):
        rng = np.random.default_rng(7)
        X, y = random_system(rng)
        grid = [0.0, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 1.0]
        norms = [np.abs(reg.fit_lasso(X, y, reg.LassoConfig(lam=lam, tol=1e-12)).weights).sum()
                 for lam in grid]
        for a, b in zip(norms, norms[1:]):
            assert b <= a + 1e-8

    def test_lasso_zero_agrees_with_ols(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            X, y = random_system(rng, n_samples=40, n_features=4)
            m_lasso = reg.fit_lasso(X, y, reg.LassoConfig(lam=0.0))
            m_ols = reg.fit_ols(X, y)
            assert np.allclose(m_lasso.weights, m_ols.weights, atol=1e-6)
            assert m_lasso.intercept == pytest.approx(m_ols.intercept, abs=1e-6)


class TestFitOls:
    def test_exact_interpolation(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(12, 3))
        w = np.array([1.5, -2.0, 0.25])
        y = X @ w + 0.7
        model = reg.fit_ols(X, y)
        residuals = y - X @ model.weights - model.intercept
        assert np.all(np.abs(residuals) < 1e-9)

    def test_constant_column_gives_intercept_only(self):
        X = np.ones((8, 1))
        y = np.arange(8.0)
        model = reg.fit_ols(X, y)
        assert model.weights[0] == 0.0
        assert model.intercept == pytest.approx(y.mean())

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        model = reg.fit_ols(X, y)
        w_ref, b_ref = normal_equations_fit(X, y)
        assert np.allclose(model.weights, w_ref, atol=1e-8)
        assert model.intercept == pytest.approx(b_ref, abs=1e-8)


class TestPredict:
    def test_zero_weights_returns_intercept(self):
        model = reg.LinearModel(np.zeros(3), 2.5, np.zeros(3), np.ones(3))
        assert reg.predict(model, np.array([9.0, -4.0, 100.0])) == 2.5

    def test_unit_weight(self):
        model = reg.LinearModel(np.array([1.0, 0.0]), 0.0, np.zeros(2), np.ones(2))
        assert reg.predict(model, np.array([3.0, 77.0])) == 3.0

    def test_in_sample_fitted_values_match_oracle(self):
        rng = np.random.default_rng(11)
        X, y = random_system(rng, n_samples=30, n_features=4)
        model = reg.fit_ols(X, y)
        w_ref, b_ref = normal_equations_fit(X, y)
        for i in range(5):
            assert reg.predict(model, X[i]) == pytest.approx(X[i] @ w_ref + b_ref, abs=1e-8)

    def test_dimension_mismatch(self):
        model = reg.LinearModel(np.zeros(3), 0.0, np.zeros(3), np.ones(3))
        with pytest.raises(TrendkitError, match="expected 3"):
            reg.predict(model, np.array([1.0, 2.0]))

    def test_affine_in_input(self):
        rng = np.random.default_rng(12)
        X, y = random_system(rng, n_samples=30, n_features=4)
        model = reg.fit_lasso(X, y, reg.LassoConfig(lam=0.01))
        for _ in range(10):
            a = float(rng.uniform(-1, 2))
            x1, x2 = rng.normal(size=4), rng.normal(size=4)
            mixed = reg.predict(model, a * x1 + (1 - a) * x2)
            combo = a * reg.predict(model, x1) + (1 - a) * reg.predict(model, x2)
            assert mixed == pytest.approx(combo, abs=1e-9)


class TestObjective:
    def test_perfect_fit_is_zero(self):
        X = np.array([[1.0], [2.0], [3.0]])
        assert reg.objective(X, X[:, 0] * 2.0, np.array([2.0]), 0.0, 0.0) == 0.0

    def test_zero_model_is_mean_square(self):
        y = np.array([1.0, -2.0, 3.0])
        X = np.ones((3, 2))
        assert reg.objective(X, y, np.zeros(2), 0.0, 0.5) == pytest.approx(np.mean(y ** 2))

    def test_fitted_model_dominates_zero_model(self):
        rng = np.random.default_rng(13)
        for lam in (0.0, 0.01, 0.1):
            X, y = random_system(rng)
            model = reg.fit_lasso(X, y, reg.LassoConfig(lam=lam))
            fitted = reg.objective(X, y, model.weights, model.intercept, lam)
            zero = reg.objective(X, y, np.zeros(X.shape[1]), 0.0, lam)
            assert fitted <= zero + 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(TrendkitError):
            reg.objective(np.ones((3, 2)), np.ones(3), np.ones(3), 0.0, 0.0)


class TestModelText:
    def test_round_trip(self):
        rng = np.random.default_rng(14)
        X, y = random_system(rng, n_samples=30, n_features=3, standardized=False)
        model = reg.fit_lasso(X, y, reg.LassoConfig(lam=0.02), target_name="close")
        names = ["close", "return_1", "sma_5"]
        text = reg.model_to_text(model, names)
        back, back_names = reg.model_from_text(text)
        assert back_names == names
        assert back.target_name == "close"
        assert np.array_equal(back.weights, model.weights)
        assert back.intercept == model.intercept
        assert back.lam == model.lam
        assert back.n_sweeps == model.n_sweeps
        assert np.array_equal(back.feature_means, model.feature_means)
        assert np.array_equal(back.feature_scales, model.feature_scales)

    def test_format_keys(self):
        model = reg.LinearModel(np.array([1.0]), 0.5, np.zeros(1), np.ones(1),
                                target_name="close", lam=0.1, n_sweeps=7)
        text = reg.model_to_text(model, ["close"])
        assert text.startswith("target: close\n")
        assert "weight close: 1.0" in text
        assert "intercept: 0.5" in text
        assert "lambda: 0.1" in text
        assert "sweeps: 7" in text
