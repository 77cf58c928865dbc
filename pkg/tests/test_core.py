import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catprior import core
from catprior._validation import DimensionError
from catprior.core import (Dataset, DegenerateResponseError, ModelFamily, RankDeficientError,
                           fit_simple_model, log_likelihood, log_likelihood_grad_hess)

BERN = ModelFamily.bernoulli()


def _random_instance(rng, family):
    n, p = rng.integers(1, 21), rng.integers(1, 7)
    X = rng.normal(size=(n, p))
    if family.kind == "bernoulli":
        y = rng.uniform(size=n)
    else:
        y = rng.normal(size=n)
    w = rng.uniform(0.1, 2.0, size=n)
    return Dataset(X, y, weights=w), rng.normal(size=p)


class TestDataset:
    def test_frozen_arrays(self):
        d = Dataset(np.ones((2, 1)), [0.0, 1.0])
        with pytest.raises(ValueError):
            d.covariates[0, 0] = 2.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            Dataset(np.ones((3, 2)), [1.0, 2.0])

    def test_nonpositive_weight(self):
        with pytest.raises(ValueError):
            Dataset(np.ones((2, 1)), [0.0, 1.0], weights=[1.0, 0.0])

    def test_treatment_must_be_binary(self):
        with pytest.raises(ValueError):
            Dataset(np.ones((2, 1)), [0.0, 1.0], treatment=[0, 2])

    def test_arm_and_concat(self):
        d = Dataset(np.arange(6.0).reshape(3, 2), [1.0, 0.0, 1.0], treatment=[1, 0, 1])
        assert d.arm(1).n == 2
        assert d.concat(d.arm(0)).n == 4

    def test_intercept_detection(self):
        d = Dataset(np.column_stack([np.ones(3), [1.0, 2.0, 3.0]]), np.zeros(3))
        assert d.intercept_index == 0
        named = Dataset(np.column_stack([[1.0, 2.0, 3.0], np.ones(3)]), np.zeros(3),
                        column_names=("x", core.INTERCEPT))
        assert named.intercept_index == 1


class TestLogLikelihood:
    def test_bernoulli_symmetric_point(self):
        d = Dataset([[1.0]], [1.0])
        assert log_likelihood(BERN, [0.0], d) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_gaussian_weighted_origin(self):
        d = Dataset([[1.0]], [0.0], weights=[2.0])
        val = log_likelihood(ModelFamily.gaussian(1.0), [0.0], d)
        assert val == pytest.approx(-math.log(2 * math.pi), abs=1e-12)

    def test_fractional_bernoulli_scalar(self):
        d = Dataset([[1.0, 2.0]], [0.25], weights=[0.5])
        expected = 0.5 * (0.25 * (-1.0) - math.log1p(math.exp(-1.0)))
        assert log_likelihood(BERN, [1.0, -1.0], d) == pytest.approx(expected, abs=1e-14)
        assert expected == pytest.approx(-0.2816308437591114, abs=1e-15)

    def test_extreme_eta_is_finite(self):
        d = Dataset([[1.0], [1.0]], [1.0, 0.0])
        assert np.isfinite(log_likelihood(BERN, [700.0], d))
        assert np.isfinite(log_likelihood(BERN, [-700.0], d))

    def test_dimension_error(self):
        d = Dataset([[1.0, 2.0]], [1.0])
        with pytest.raises(DimensionError):
            log_likelihood(BERN, [1.0], d)

    def test_nonfinite_beta(self):
        d = Dataset([[1.0]], [1.0])
        with pytest.raises(ValueError):
            log_likelihood(BERN, [np.nan], d)

    def test_grad_hess_single_row(self):
        g, H = log_likelihood_grad_hess(BERN, [0.0], Dataset([[1.0]], [1.0]))
        assert g == pytest.approx([0.5])
        assert H[0, 0] == pytest.approx(-0.25)

    def test_gaussian_closed_forms(self):
        rng = np.random.default_rng(5)
        X, y, beta = rng.normal(size=(5, 3)), rng.normal(size=5), rng.normal(size=3)
        w = rng.uniform(0.5, 2, 5)
        g, H = log_likelihood_grad_hess(ModelFamily.gaussian(1.0), beta, Dataset(X, y, weights=w))
        np.testing.assert_allclose(g, X.T @ (w * (y - X @ beta)), rtol=1e-12)
        np.testing.assert_allclose(H, -(X.T * w) @ X, rtol=1e-12)

    @pytest.mark.parametrize("family", [BERN, ModelFamily.gaussian(0.7)], ids=["bern", "gauss"])
    def test_derivatives_match_finite_differences(self, family):
        rng = np.random.default_rng(11)
        for _ in range(50):
            data, beta = _random_instance(rng, family)
            g, H = log_likelihood_grad_hess(family, beta, data)
            assert np.array_equal(H, H.T)
            h = 1e-6
            eye = np.eye(beta.size)
            fd_g = np.array([(log_likelihood(family, beta + h * e, data)
                              - log_likelihood(family, beta - h * e, data)) / (2 * h) for e in eye])
            np.testing.assert_allclose(g, fd_g, rtol=1e-6, atol=1e-6 * (1 + np.abs(g).max()))
            fd_H = np.array([(log_likelihood_grad_hess(family, beta + h * e, data)[0]
                              - log_likelihood_grad_hess(family, beta - h * e, data)[0]) / (2 * h)
                             for e in eye])
            np.testing.assert_allclose(H, fd_H, rtol=1e-5, atol=1e-5 * (1 + np.abs(H).max()))

    def test_bernoulli_hessian_nsd(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            data, beta = _random_instance(rng, BERN)
            _, H = log_likelihood_grad_hess(BERN, beta, data)
            assert np.linalg.eigvalsh(H).max() <= 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 30), st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
    def test_additive_over_row_partitions(self, n, p, seed):
        rng = np.random.default_rng(seed)
        data = Dataset(rng.normal(size=(n, p)), rng.uniform(size=n), weights=rng.uniform(0.1, 3, n))
        beta = rng.normal(size=p)
        cut = rng.integers(1, n)
        a, b = data.rows(np.arange(cut)), data.rows(np.arange(cut, n))
        whole = log_likelihood(BERN, beta, data)
        parts = log_likelihood(BERN, beta, a) + log_likelihood(BERN, beta, b)
        assert whole == pytest.approx(parts, rel=1e-13, abs=1e-13)


class TestSimpleModel:
    def test_gaussian_intercept_mean(self):
        d = Dataset(np.ones((3, 1)), [1.0, 2.0, 3.0])
        spec = fit_simple_model(d, [0], ModelFamily.gaussian(1.0))
        assert spec.coefficients[0] == pytest.approx(2.0, abs=1e-14)

    def test_bernoulli_balanced(self):
        d = Dataset(np.ones((4, 1)), [1.0, 1.0, 0.0, 0.0])
        assert fit_simple_model(d, [0], BERN).coefficients[0] == pytest.approx(0.0, abs=1e-12)

    def test_bernoulli_three_quarters(self):
        d = Dataset(np.ones((4, 1)), [1.0, 1.0, 1.0, 0.0])
        # frozen from a scalar Newton solve of the score equation
        assert fit_simple_model(d, [0], BERN).coefficients[0] == pytest.approx(1.0986122886681098,
                                                                                abs=1e-10)

    def test_intercept_always_included_and_zeros_off_subset(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.ones(30), rng.normal(size=(30, 3))])
        y = (rng.uniform(size=30) < 0.5).astype(float)
        spec = fit_simple_model(Dataset(X, y), [2], BERN)
        assert spec.subset == (0, 2)
        assert spec.coefficients[1] == 0.0 and spec.coefficients[3] == 0.0

    def test_exact_linear_recovery(self):
        rng = np.random.default_rng(1)
        X = np.column_stack([np.ones(20), rng.normal(size=(20, 4))])
        beta = np.array([0.5, -1.0, 0.0, 2.0, 0.0])
        spec = fit_simple_model(Dataset(X, X @ beta), [1, 3], ModelFamily.gaussian(1.0))
        np.testing.assert_allclose(spec.coefficients, beta, atol=1e-10)

    def test_weighted_mean_matches_intercept(self):
        d = Dataset(np.ones((3, 1)), [1.0, 0.0, 0.0], weights=[2.0, 1.0, 1.0])
        spec = fit_simple_model(d, [], BERN)
        assert spec.predict_mean(np.ones((1, 1)))[0] == pytest.approx(0.5, abs=1e-10)

    def test_rank_deficient(self):
        X = np.column_stack([np.ones(4), [1.0, 2.0, 3.0, 4.0], [2.0, 4.0, 6.0, 8.0]])
        with pytest.raises(RankDeficientError):
            fit_simple_model(Dataset(X, np.arange(4.0)), [1, 2], ModelFamily.gaussian(1.0))

    def test_degenerate_response_advises_proportion(self):
        d = Dataset(np.ones((3, 1)), [1.0, 1.0, 1.0])
        with pytest.raises(DegenerateResponseError, match="proportion"):
            fit_simple_model(d, [0], BERN)

    def test_off_subset_must_be_zero(self):
        with pytest.raises(ValueError):
            core.SimpleModelSpec(BERN, (0,), np.array([1.0, 0.5]))

    def test_dict_round_trip(self):
        d = Dataset(np.ones((4, 1)), [1.0, 1.0, 1.0, 0.0])
        spec = fit_simple_model(d, [0], BERN)
        back = core.SimpleModelSpec.from_dict(spec.to_dict())
        np.testing.assert_array_equal(back.coefficients, spec.coefficients)
        assert back.family == spec.family


class TestCsv:
    def test_round_trip_and_intercept(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,__y__,__z__\n1.5,2,1,0\n0.25,3,0,1\n")
        d = core.read_csv(path)
        assert d.column_names == (core.INTERCEPT, "a", "b")
        np.testing.assert_array_equal(d.treatment, [0, 1])
        out = tmp_path / "e.csv"
        core.write_csv(d.with_weights([0.5, 2.0]), out)
        back = core.read_csv(out)
        np.testing.assert_array_equal(back.covariates, d.covariates)
        np.testing.assert_array_equal(back.weights, [0.5, 2.0])

    def test_missing_response(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a\n1\n")
        with pytest.raises(ValueError):
            core.read_csv(path)
