import math

import numpy as np
import pytest

from novkit.errors import (DataError, DegenerateGroupError,
                           RankDeficiencyError)
from novkit.stats import (DesignMatrix, check_loss, logistic_fit, ols_fit,
                          quantile_fit)

from oracles import (logistic_grid_mle, logistic_loglik, ols_normal_equations,
                     quantile_vertex_enumeration)


def design(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = tuple(names or ["intercept"] + [f"x{i}" for i in range(1, X.shape[1])])
    return DesignMatrix(names=names, X=X, y=np.asarray(y, dtype=float))


def with_intercept(x):
    x = np.asarray(x, dtype=float)
    return np.column_stack([np.ones(len(x)), x])


class TestOls:
    def test_noiseless_recovery(self):
        x = np.arange(10, dtype=float)
        y = 2.0 + 3.0 * x
        result = ols_fit(design(with_intercept(x), y))
        assert result.coefficients["intercept"] == pytest.approx(2.0, abs=1e-10)
        assert result.coefficients["x1"] == pytest.approx(3.0, abs=1e-10)
        assert result.fit == pytest.approx(1.0, abs=1e-12)

    def test_constant_response_zero_slopes(self, rng):
        x = rng.normal(size=12)
        result = ols_fit(design(with_intercept(x), np.full(12, 5.0)))
        assert result.coefficients["x1"] == pytest.approx(0.0, abs=1e-10)
        assert result.coefficients["intercept"] == pytest.approx(5.0, abs=1e-10)

    def test_matches_high_precision_oracle(self, rng):
        for _ in range(20):
            X = np.column_stack([np.ones(50), rng.normal(size=(50, 3))])
            y = rng.normal(size=50)
            result = ols_fit(design(X, y))
            expected = ols_normal_equations(X, y)
            got = result.coef_vector(result.coefficients.keys())
            assert np.allclose(got, expected, atol=1e-8)

    def test_residual_orthogonality(self, rng):
        X = np.column_stack([np.ones(40), rng.normal(size=(40, 2))])
        y = rng.normal(size=40)
        result = ols_fit(design(X, y))
        projections = X.T @ result.residuals
        assert np.max(np.abs(projections)) < 1e-8 * max(1.0, float(np.abs(y).sum()))

    def test_rank_deficiency_names_columns(self, rng):
        x = rng.normal(size=20)
        X = np.column_stack([np.ones(20), x, 2 * x])
        with pytest.raises(RankDeficiencyError) as exc:
            ols_fit(design(X, rng.normal(size=20), names=("intercept", "a", "a_twice")))
        assert "a_twice" in exc.value.columns or "a" in exc.value.columns

    def test_hc_variants_scale(self, rng):
        X = with_intercept(rng.normal(size=30))
        y = rng.normal(size=30)
        hc0 = ols_fit(design(X, y), robust_kind="HC0")
        hc1 = ols_fit(design(X, y), robust_kind="HC1")
        ratio = (30 / (30 - 2)) ** 0.5
        for term in hc0.std_errors:
            assert hc1.std_errors[term] == pytest.approx(hc0.std_errors[term] * ratio, rel=1e-12)

    def test_shift_only_moves_intercept(self, rng):
        X = with_intercept(rng.normal(size=25))
        y = rng.normal(size=25)
        base = ols_fit(design(X, y))
        shifted = ols_fit(design(X, y + 10.0))
        assert shifted.coefficients["x1"] == pytest.approx(base.coefficients["x1"], abs=1e-10)
        assert shifted.coefficients["intercept"] == pytest.approx(
            base.coefficients["intercept"] + 10.0, abs=1e-10)

    def test_standard_errors_positive(self, rng):
        X = with_intercept(rng.normal(size=30))
        y = rng.normal(size=30)
        result = ols_fit(design(X, y))
        assert all(se > 0 for se in result.std_errors.values())
        assert result.n == 30


class TestLogistic:
    def _simulate(self, rng, n=200, beta=(0.5, 1.2)):
        x = rng.normal(size=n)
        eta = beta[0] + beta[1] * x
        y = (rng.uniform(size=n) < 1 / (1 + np.exp(-eta))).astype(float)
        return x, y

    def test_odds_ratios_exact_exp(self, rng):
        x, y = self._simulate(rng)
        result = logistic_fit(design(with_intercept(x), y))
        for term, coef in result.coefficients.items():
            assert result.odds_ratios[term] == math.exp(coef)

    def test_symmetric_data_zero_intercept(self):
        # every (x, y) point mirrored as (-x, 1-y); not separable
        x = np.array([1.0, -1.0, 2.0, -2.0, 0.5, -0.5])
        y = np.array([1.0, 0.0, 0.0, 1.0, 1.0, 0.0])
        result = logistic_fit(design(with_intercept(x), y))
        assert result.coefficients["intercept"] == pytest.approx(0.0, abs=1e-8)

    def test_matches_grid_search_oracle(self, rng):
        x = rng.normal(size=40)
        eta = -0.3 + 0.8 * x
        y = (rng.uniform(size=40) < 1 / (1 + np.exp(-eta))).astype(float)
        result = logistic_fit(design(with_intercept(x), y))
        oracle = logistic_grid_mle(x, y)
        assert result.coefficients["intercept"] == pytest.approx(oracle[0], abs=1e-4)
        assert result.coefficients["x1"] == pytest.approx(oracle[1], abs=1e-4)

    def test_gradient_vanishes_at_optimum(self, rng):
        x, y = self._simulate(rng, n=150)
        X = with_intercept(x)
        result = logistic_fit(design(X, y))
        beta = result.coef_vector(result.coefficients.keys())
        p = 1 / (1 + np.exp(-(X @ beta)))
        gradient = X.T @ (y - p)
        assert np.max(np.abs(gradient)) < 1e-6

    def test_loglik_nondecreasing_vs_null(self, rng):
        x, y = self._simulate(rng)
        X = with_intercept(x)
        result = logistic_fit(design(X, y))
        beta = result.coef_vector(result.coefficients.keys())
        p_bar = y.mean()
        ll_null = len(y) * (p_bar * math.log(p_bar) + (1 - p_bar) * math.log(1 - p_bar))
        assert logistic_loglik(X, y, beta) >= ll_null
        assert 0.0 <= result.fit < 1.0
        assert result.fit_label == "mcfadden_pseudo_r2"

    def test_one_class_rejected(self):
        x = np.arange(6, dtype=float)
        with pytest.raises(DegenerateGroupError):
            logistic_fit(design(with_intercept(x), np.ones(6)))

    def test_non_binary_rejected(self):
        x = np.arange(6, dtype=float)
        with pytest.raises(DataError):
            logistic_fit(design(with_intercept(x), x))

    def test_quasi_separation_warns(self):
        x = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
        y = (x > 0).astype(float)  # perfectly separated
        with pytest.warns(RuntimeWarning, match="quasi-separation"):
            logistic_fit(design(with_intercept(x), y), max_iter=200, tol=1e-13)


class TestQuantile:
    def test_intercept_only_median_exact(self, rng):
        y = rng.normal(size=31)  # odd n
        dm = DesignMatrix(names=("intercept",), X=np.ones((31, 1)), y=y)
        result = quantile_fit(dm, tau=0.5, n_boot=0)
        assert result.coefficients["intercept"] == float(np.median(y))  # exact

    def test_intercept_only_other_quantiles(self, rng):
        y = rng.normal(size=40)
        for tau in (0.25, 0.75):
            dm = DesignMatrix(names=("intercept",), X=np.ones((40, 1)), y=y)
            result = quantile_fit(dm, tau=tau, n_boot=0)
            obj = check_loss(y - result.coefficients["intercept"], tau)
            best = min(check_loss(y - c, tau) for c in y)
            assert obj <= best + 1e-9

    def test_noiseless_linear_any_tau(self):
        x = np.linspace(0, 5, 17)
        y = 1.5 + 2.5 * x
        for tau in (0.2, 0.5, 0.8):
            result = quantile_fit(design(with_intercept(x), y), tau=tau, n_boot=0)
            assert result.coefficients["x1"] == pytest.approx(2.5, abs=1e-6)
            assert result.coefficients["intercept"] == pytest.approx(1.5, abs=1e-6)

    def test_matches_vertex_enumeration_oracle(self, rng):
        for trial in range(8):
            n = int(rng.integers(10, 30))
            x = rng.normal(size=n)
            y = 0.5 + 1.0 * x + rng.standard_t(3, size=n)
            X = with_intercept(x)
            for tau in (0.25, 0.5, 0.75):
                result = quantile_fit(design(X, y), tau=tau, n_boot=0)
                best_obj, _ = quantile_vertex_enumeration(X, y, tau)
                got_obj = check_loss(result.residuals, tau)
                assert got_obj <= best_obj + 1e-6

    def test_objective_beats_ols(self, rng):
        x = rng.normal(size=50)
        y = 1.0 + 2.0 * x + rng.exponential(size=50)
        X = with_intercept(x)
        ols_result = ols_fit(design(X, y))
        for tau in (0.25, 0.5, 0.75):
            q_result = quantile_fit(design(X, y), tau=tau, n_boot=0)
            assert check_loss(q_result.residuals, tau) <= \
                   check_loss(ols_result.residuals, tau) + 1e-9

    def test_bootstrap_deterministic(self, rng):
        x = rng.normal(size=30)
        y = 1.0 + x + rng.normal(size=30)
        a = quantile_fit(design(with_intercept(x), y), tau=0.5, n_boot=50, seed=7)
        b = quantile_fit(design(with_intercept(x), y), tau=0.5, n_boot=50, seed=7)
        assert a.std_errors == b.std_errors

    def test_invalid_tau(self):
        dm = DesignMatrix(names=("intercept",), X=np.ones((5, 1)), y=np.arange(5.0))
        with pytest.raises(DataError):
            quantile_fit(dm, tau=1.5)

    def test_shift_only_moves_intercept(self, rng):
        x = rng.normal(size=41)
        y = 1.0 + 2.0 * x + rng.normal(size=41)
        X = with_intercept(x)
        base = quantile_fit(design(X, y), tau=0.5, n_boot=0)
        shifted = quantile_fit(design(X, y + 4.0), tau=0.5, n_boot=0)
        assert shifted.coefficients["x1"] == pytest.approx(base.coefficients["x1"], abs=1e-10)
        assert shifted.coefficients["intercept"] == pytest.approx(
            base.coefficients["intercept"] + 4.0, abs=1e-10)

    def test_median_slope_approaches_ols_under_symmetric_noise(self, rng):
        # same estimand at tau = 0.5 when noise is symmetric; at n = 2001
        # both estimates sit within sampling error of the true slope
        n = 2001
        x = rng.normal(size=n)
        y = 1.0 + 2.0 * x + rng.normal(scale=0.8, size=n)
        X = with_intercept(x)
        ols_slope = ols_fit(design(X, y)).coefficients["x1"]
        q_slope = quantile_fit(design(X, y), tau=0.5, n_boot=0).coefficients["x1"]
        assert q_slope == pytest.approx(ols_slope, abs=0.1)
        assert q_slope == pytest.approx(2.0, abs=0.1)
