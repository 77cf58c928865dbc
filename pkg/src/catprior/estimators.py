"""scikit-learn style estimators over the functional API.

``X`` passed to these estimators excludes the intercept; it is added as an
explicit first column when ``fit_intercept`` is true. ``simple_subset``
indexes columns of ``X``.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .core import INTERCEPT, Dataset, ModelFamily
from .fitting import fit_cauchy_map, fit_linear_posterior, fit_map
from .synth import catalytic_prior


def _design(X, fit_intercept: bool) -> tuple[np.ndarray, tuple]:
    X = np.asarray(X, dtype=float)
    names = tuple(f"x{j}" for j in range(X.shape[1]))
    if fit_intercept:
        return np.column_stack([np.ones(X.shape[0]), X]), (INTERCEPT,) + names
    return X, names


class _CatalyticBase(BaseEstimator):
    def __init__(self, tau=None, n_synthetic=None, simple_subset=(), scheme="marginal_resample",
                 response_mode=None, fit_intercept=True, random_state=0):
        self.tau = tau
        self.n_synthetic = n_synthetic
        self.simple_subset = simple_subset
        self.scheme = scheme
        self.response_mode = response_mode
        self.fit_intercept = fit_intercept
        self.random_state = random_state

    def _prior(self, data: Dataset, family: ModelFamily):
        offset = 1 if self.fit_intercept else 0
        subset = tuple(int(j) + offset for j in self.simple_subset)
        seed = 0 if self.random_state is None else int(self.random_state)
        prior = catalytic_prior(data, family, subset, tau=self.tau, M=self.n_synthetic,
                                scheme=self.scheme, mode=self.response_mode, seed=seed)
        self.prior_ = prior
        self.tau_ = prior.tau
        return prior

    def _set_coef(self, beta):
        beta = np.asarray(beta, dtype=float)
        if self.fit_intercept:
            self.intercept_, self.coef_ = float(beta[0]), beta[1:].copy()
        else:
            self.intercept_, self.coef_ = 0.0, beta.copy()

    def _eta(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_


class CatalyticLinearRegression(RegressorMixin, _CatalyticBase):
    """Gaussian linear model with a catalytic prior and known noise ``sigma``.

    Attributes
    ----------
    coef_, intercept_ : posterior mean
    covariance_ : posterior covariance (intercept first when fitted)
    prior_ : the :class:`~catprior.synth.CatalyticPrior` used
    """

    def __init__(self, sigma=1.0, tau=None, n_synthetic=None, simple_subset=(),
                 scheme="marginal_resample", response_mode=None, fit_intercept=True,
                 random_state=0):
        super().__init__(tau, n_synthetic, simple_subset, scheme, response_mode,
                         fit_intercept, random_state)
        self.sigma = sigma

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        Xd, names = _design(X, self.fit_intercept)
        data = Dataset(Xd, y, column_names=names)
        family = ModelFamily.gaussian(self.sigma)
        post = fit_linear_posterior(data, self._prior(data, family), self.sigma)
        self.posterior_ = post
        self.covariance_ = post.covariance
        self._set_coef(post.mean)
        return self

    def predict(self, X):
        return self._eta(X)


class CatalyticLogisticRegression(ClassifierMixin, _CatalyticBase):
    """Binary logistic regression, posterior mode under a catalytic prior.

    ``y`` must be 0/1. Synthetic responses default to fitted probabilities
    (``response_mode="expected_value"``).
    """

    def __init__(self, tau=None, n_synthetic=None, simple_subset=(), scheme="marginal_resample",
                 response_mode=None, fit_intercept=True, random_state=0, max_iter=100, tol=1e-8):
        super().__init__(tau, n_synthetic, simple_subset, scheme, response_mode,
                         fit_intercept, random_state)
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        X, y = validate_data(self, X, y)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2 or not np.all(np.isin(self.classes_, [0, 1])):
            raise ValueError(f"y must contain exactly the labels 0 and 1, got {self.classes_}")
        Xd, names = _design(X, self.fit_intercept)
        data = Dataset(Xd, y.astype(float), column_names=names)
        family = ModelFamily.bernoulli()
        res = fit_map(data, family, self._prior(data, family), self.max_iter, self.tol)
        self.map_ = res
        self.n_iter_ = res.iterations
        self._set_coef(res.beta_hat)
        return self

    def decision_function(self, X):
        return self._eta(X)

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        positive = self.decision_function(X) > 0
        return self.classes_[positive.astype(int)]


class CauchyLogisticRegression(ClassifierMixin, BaseEstimator):
    """Logistic posterior mode under independent Cauchy priors on standardised inputs."""

    def __init__(self, scale=2.5, intercept_scale=10.0, max_iter=100, tol=1e-8):
        self.scale = scale
        self.intercept_scale = intercept_scale
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        X, y = validate_data(self, X, y)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2 or not np.all(np.isin(self.classes_, [0, 1])):
            raise ValueError(f"y must contain exactly the labels 0 and 1, got {self.classes_}")
        Xd, names = _design(X, True)
        res = fit_cauchy_map(Dataset(Xd, y.astype(float), column_names=names), self.scale,
                             self.intercept_scale, self.max_iter, self.tol)
        self.map_ = res
        self.n_iter_ = res.iterations
        self.intercept_, self.coef_ = float(res.beta_hat[0]), res.beta_hat[1:].copy()
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        positive = self.decision_function(X) > 0
        return self.classes_[positive.astype(int)]
