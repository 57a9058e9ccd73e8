import itertools
import math

import numpy as np
import pytest

from novkit.errors import DataError
from novkit.stats import (mann_whitney_u, pearson_matrix, significance_stars,
                          vif)

from oracles import mwu_exact_p, mwu_permutation_p, mwu_statistic


class TestVif:
    def test_orthogonal_columns_give_one(self):
        # centered orthogonal design
        X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        result = vif(X, ["a", "b"])
        assert result.per_column == {"a": 1.0, "b": 1.0}
        assert result.mean_vif == 1.0
        assert result.collinear == ()

    def test_duplicate_column_flags_infinite(self, rng):
        x = rng.normal(size=50)
        result = vif(np.column_stack([x, x]), ["a", "a_copy"])
        assert result.collinear == ("a", "a_copy")
        assert math.isinf(result.per_column["a"])
        assert math.isinf(result.mean_vif)

    def test_near_duplicate_matches_r2_chain(self, rng):
        x1 = rng.normal(size=100)
        x2 = x1 + 0.05 * rng.normal(size=100)
        x3 = rng.normal(size=100)
        X = np.column_stack([x1, x2, x3])
        result = vif(X, ["x1", "x2", "x3"])
        # oracle: chain an independent least-squares R^2 for each column
        for j, name in enumerate(["x1", "x2", "x3"]):
            others = np.column_stack([np.ones(100), np.delete(X, j, axis=1)])
            coef, *_ = np.linalg.lstsq(others, X[:, j], rcond=None)
            resid = X[:, j] - others @ coef
            r2 = 1 - resid @ resid / np.sum((X[:, j] - X[:, j].mean()) ** 2)
            assert result.per_column[name] == pytest.approx(1 / (1 - r2), abs=1e-8)

    def test_mean_is_per_column_mean(self, rng):
        X = rng.normal(size=(60, 4))
        result = vif(X, list("abcd"))
        assert result.mean_vif == pytest.approx(np.mean(list(result.per_column.values())), abs=1e-12)

    def test_requires_two_columns(self):
        with pytest.raises(DataError):
            vif(np.ones((10, 1)), ["only"])


class TestPearson:
    def test_self_correlation_is_one(self, rng):
        x = rng.normal(size=20)
        names, matrix = pearson_matrix({"x": x, "x2": x * 2 + 1})
        assert matrix[0, 0] == 1.0 and matrix[1, 1] == 1.0
        assert matrix[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_negation_gives_minus_one(self, rng):
        x = rng.normal(size=20)
        _, matrix = pearson_matrix({"x": x, "neg": -x})
        assert matrix[0, 1] == pytest.approx(-1.0, abs=1e-12)

    def test_matches_direct_formula(self, rng):
        a = rng.normal(size=20)
        b = rng.normal(size=20)
        _, matrix = pearson_matrix({"a": a, "b": b})
        cov = np.mean((a - a.mean()) * (b - b.mean()))
        expected = cov / (a.std() * b.std())
        assert matrix[0, 1] == pytest.approx(expected, abs=1e-12)
        assert matrix[1, 0] == matrix[0, 1]

    def test_constant_series_rejected(self):
        with pytest.raises(DataError, match="flat"):
            pearson_matrix({"x": [1.0, 2.0, 3.0], "flat": [5.0, 5.0, 5.0]})


class TestMannWhitney:
    def test_identical_multisets_center_u(self):
        a = [1.0, 2.0, 3.0]
        result = mann_whitney_u(a, list(a))
        assert result.u_a == len(a) * len(a) / 2

    def test_reference_exact_case(self):
        result = mann_whitney_u([1.0, 2.0], [3.0, 4.0])
        assert result.u_a == 0.0
        assert result.method == "exact"
        assert result.p_two_sided == pytest.approx(2 / 6)

    def test_exact_agreement_all_small_splits(self):
        # every two-sample split of 1..8 up to n_a + n_b <= 10 (subsampled sizes)
        values = list(range(1, 11))
        for n_a in (1, 2, 3, 4, 5):
            for subset in itertools.combinations(values, n_a):
                b = [v for v in values if v not in subset][: 10 - n_a]
                if not b:
                    continue
                result = mann_whitney_u(list(map(float, subset)), list(map(float, b)))
                assert result.method == "exact"
                assert result.u_a == mwu_statistic(subset, b)
                assert result.p_two_sided == pytest.approx(mwu_exact_p(subset, b), abs=1e-12)

    def test_ties_use_normal_approximation(self):
        a = [1.0, 2.0, 2.0, 3.0]
        b = [2.0, 3.0, 3.0, 4.0]
        result = mann_whitney_u(a, b)
        assert result.method == "normal"
        assert result.z is not None

    def test_normal_p_close_to_permutation_oracle(self, rng):
        a = list(rng.integers(0, 6, size=30).astype(float))
        b = list(rng.integers(1, 7, size=25).astype(float))
        result = mann_whitney_u(a, b)
        assert result.method == "normal"
        oracle = mwu_permutation_p(a, b, n_perm=100_000, seed=11)
        assert result.p_two_sided == pytest.approx(oracle, abs=1e-2)

    def test_large_tie_free_uses_normal(self, rng):
        a = list(rng.normal(size=20))
        b = list(rng.normal(size=20))
        assert mann_whitney_u(a, b).method == "normal"

    def test_empty_sample_rejected(self):
        with pytest.raises(DataError):
            mann_whitney_u([], [1.0])

    def test_u_complement(self, rng):
        a = list(rng.normal(size=9))
        b = list(rng.normal(size=7))
        result = mann_whitney_u(a, b)
        assert result.u_a + result.u_b == len(a) * len(b)


class TestStars:
    @pytest.mark.parametrize("p,expected", [
        (0.005, "***"), (0.01, "**"), (0.03, "**"), (0.05, "*"),
        (0.07, "*"), (0.1, ""), (0.5, ""),
    ])
    def test_convention(self, p, expected):
        assert significance_stars(p) == expected
