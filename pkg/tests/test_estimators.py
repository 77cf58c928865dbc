import numpy as np
import pytest
from sklearn.base import clone

from catprior.core import Dataset, ModelFamily
from catprior.estimators import (CatalyticLinearRegression, CatalyticLogisticRegression,
                                 CauchyLogisticRegression)
from catprior.fitting import fit_cauchy_map, fit_linear_posterior, fit_map
from catprior.synth import catalytic_prior


def _logistic(n=80, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-(0.3 + X @ [1.0, -0.5, 0.0])))).astype(int)
    return X, y


def _with_intercept(X):
    return np.column_stack([np.ones(len(X)), X])


class TestLinear:
    def test_matches_functional(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(25, 2))
        y = X @ [1.0, 2.0] + rng.normal(size=25)
        est = CatalyticLinearRegression(sigma=0.8, tau=3.0, n_synthetic=400,
                                        random_state=5).fit(X, y)
        names = ("__intercept__", "x0", "x1")
        data = Dataset(_with_intercept(X), y, column_names=names)
        prior = catalytic_prior(data, ModelFamily.gaussian(0.8), tau=3.0, M=400, seed=5)
        post = fit_linear_posterior(data, prior, 0.8)
        assert est.intercept_ == post.mean[0]
        np.testing.assert_array_equal(est.coef_, post.mean[1:])
        np.testing.assert_array_equal(est.covariance_, post.covariance)
        assert est.prior_.weight == pytest.approx(3.0 / 400)
        assert est.score(X, y) > 0.8

    def test_no_intercept(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(25, 2))
        est = CatalyticLinearRegression(fit_intercept=False, simple_subset=(0,)).fit(X, X[:, 0])
        assert est.intercept_ == 0.0 and est.coef_.shape == (2,)


class TestLogistic:
    def test_matches_functional(self):
        X, y = _logistic()
        est = CatalyticLogisticRegression(tau=4.0, random_state=2).fit(X, y)
        data = Dataset(_with_intercept(X), y.astype(float),
                       column_names=("__intercept__", "x0", "x1", "x2"))
        prior = catalytic_prior(data, ModelFamily.bernoulli(), tau=4.0, seed=2)
        beta = fit_map(data, ModelFamily.bernoulli(), prior).beta_hat
        np.testing.assert_array_equal(np.r_[est.intercept_, est.coef_], beta)
        proba = est.predict_proba(X)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0)
        np.testing.assert_array_equal(est.predict(X), (proba[:, 1] > 0.5).astype(int))
        assert est.tau_ == 4.0 and est.n_iter_ > 0

    def test_default_tau_is_p(self):
        X, y = _logistic()
        assert CatalyticLogisticRegression().fit(X, y).tau_ == 4

    def test_separated_data_finite(self):
        x = np.linspace(-1, 1, 40)[:, None]
        est = CatalyticLogisticRegression().fit(x, (x[:, 0] > 0).astype(int))
        assert est.map_.converged and np.all(np.isfinite(est.coef_))

    def test_labels(self):
        X, _ = _logistic()
        with pytest.raises(ValueError):
            CatalyticLogisticRegression().fit(X, np.arange(len(X)) % 3)

    def test_feature_count_checked(self):
        X, y = _logistic()
        est = CatalyticLogisticRegression().fit(X, y)
        with pytest.raises(ValueError):
            est.predict(X[:, :2])

    def test_clone_and_params(self):
        est = CatalyticLogisticRegression(tau=7.0, simple_subset=(1,))
        c = clone(est)
        assert c.get_params() == est.get_params()
        assert c.get_params()["tau"] == 7.0


class TestCauchy:
    def test_matches_functional(self):
        X, y = _logistic(seed=3)
        est = CauchyLogisticRegression().fit(X, y)
        data = Dataset(_with_intercept(X), y.astype(float),
                       column_names=("__intercept__", "x0", "x1", "x2"))
        beta = fit_cauchy_map(data).beta_hat
        np.testing.assert_array_equal(np.r_[est.intercept_, est.coef_], beta)
        assert est.score(X, y) > 0.5

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError
        with pytest.raises(NotFittedError):
            CauchyLogisticRegression().predict(np.ones((2, 3)))
