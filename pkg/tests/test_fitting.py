import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from catprior.core import Dataset, ModelFamily, SimpleModelSpec, log_likelihood
from catprior.fitting import (LogPosterior, SingularSystemError, cauchy_log_prior,
                              fit_cauchy_map, fit_linear_posterior, fit_map, log_posterior,
                              standardize)
from catprior.synth import (EXPECTED, CatalyticPrior, CovariateScheme, SynthConfig,
                            build_catalytic_prior, catalytic_prior)

BERN = ModelFamily.bernoulli()
GAUSS = ModelFamily.gaussian(1.0)


def _fixed_prior(observed, X_star, coef, tau, family=GAUSS):
    """Catalytic prior with fixed synthetic covariates and expected-value responses."""
    X_star = np.asarray(X_star, dtype=float)
    coef = np.asarray(coef, dtype=float)
    subset = tuple(np.flatnonzero(coef)) or (0,)
    spec = SimpleModelSpec(family, subset, coef)
    cfg = SynthConfig(X_star.shape[0], tau, (spec,), CovariateScheme.fixed(X_star), mode=EXPECTED)
    return build_catalytic_prior(observed, cfg)


def _separated(n=20):
    x = np.linspace(-1.0, 1.0, n)
    X = np.column_stack([np.ones(n), x])
    return Dataset(X, (x > 0).astype(float))


def _logistic(n, p, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
    beta = rng.normal(scale=0.5, size=p)
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-X @ beta))).astype(float)
    return Dataset(X, y)


class TestLinearPosterior:
    def test_prior_only_identity(self):
        p = 3
        empty = Dataset.empty([f"x{j}" for j in range(p)])
        synth = Dataset(np.eye(p), np.zeros(p), weights=np.ones(p))
        prior = CatalyticPrior(synth, float(p), None)
        post = fit_linear_posterior(empty, prior, 1.0)
        np.testing.assert_array_equal(post.mean, np.zeros(p))
        np.testing.assert_allclose(post.covariance, np.eye(p), atol=1e-15)

    def test_two_by_two(self):
        obs = Dataset(np.eye(2), [1.0, 0.0])
        prior = _fixed_prior(obs, np.eye(2), [0.0, 0.0], 2.0)
        post = fit_linear_posterior(obs, prior, 1.0)
        np.testing.assert_allclose(post.mean, [0.5, 0.0], atol=1e-15)
        np.testing.assert_allclose(post.covariance, 0.5 * np.eye(2), atol=1e-15)

    def test_generic_optimizer_oracle(self):
        rng = np.random.default_rng(8)
        n, p, sigma = 15, 4, 0.8
        X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
        obs = Dataset(X, X @ rng.normal(size=p) + sigma * rng.normal(size=n))
        prior = catalytic_prior(obs, ModelFamily.gaussian(sigma), [1], tau=4.0, M=400, seed=3)
        post = fit_linear_posterior(obs, prior, sigma)
        lp = log_posterior(obs, ModelFamily.gaussian(sigma), prior)
        res = minimize(lambda b: -lp(b), np.zeros(p), jac=lambda b: -lp.grad_hess(b)[0],
                       method="BFGS", options={"gtol": 1e-12})
        np.testing.assert_allclose(post.mean, res.x, atol=1e-8)
        H = lp.grad_hess(post.mean)[1]
        np.testing.assert_allclose(post.covariance, np.linalg.inv(-H) * sigma ** 2 / sigma ** 2,
                                   atol=1e-8)
        assert np.allclose(post.covariance, post.covariance.T)
        assert np.all(np.linalg.eigvalsh(post.covariance) > 0)

    def test_singular_names_rank(self):
        obs = Dataset(np.ones((3, 2)), [1.0, 2.0, 3.0])
        synth = Dataset(np.ones((2, 2)), np.zeros(2), weights=[0.5, 0.5])
        with pytest.raises(SingularSystemError, match="rank 1"):
            fit_linear_posterior(obs, CatalyticPrior(synth, 1.0, None), 1.0)

    def test_map_matches_closed_form(self):
        rng = np.random.default_rng(1)
        X = np.column_stack([np.ones(30), rng.normal(size=(30, 2))])
        obs = Dataset(X, rng.normal(size=30))
        prior = catalytic_prior(obs, GAUSS, [2], tau=3.0, M=400, seed=2)
        post = fit_linear_posterior(obs, prior, 1.0)
        res = fit_map(obs, GAUSS, prior)
        assert res.converged
        np.testing.assert_allclose(res.beta_hat, post.mean, atol=1e-10)

    def test_json(self):
        obs = Dataset(np.eye(2), [1.0, 0.0])
        d = fit_linear_posterior(obs, _fixed_prior(obs, np.eye(2), [0.0, 0.0], 2.0), 1.0).to_dict()
        assert d["mean"] == pytest.approx([0.5, 0.0], abs=1e-15) and len(d["covariance"]) == 2


class TestRidge:
    def test_ridge_reduction(self):
        rng = np.random.default_rng(4)
        n, p, M, tau = 25, 3, 3, 2.5
        X = rng.normal(size=(n, p))
        X = (X - X.mean(0)) / X.std(0)
        y = X @ rng.normal(size=p) + rng.normal(size=n)
        obs = Dataset(X, y)
        X_star = np.sqrt(M) * np.eye(p)          # (1/M) X*'X* = I
        prior = _fixed_prior(obs, X_star, np.zeros(p), tau)
        post = fit_linear_posterior(obs, prior, 1.0)
        ridge = np.linalg.solve(X.T @ X + tau * np.eye(p), X.T @ y)
        np.testing.assert_allclose(post.mean, ridge, atol=1e-10)

    def test_generalized_ridge(self):
        rng = np.random.default_rng(5)
        n, p, M, tau = 20, 3, 50, 6.0
        X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
        y = X @ rng.normal(size=p) + rng.normal(size=n)
        obs = Dataset(X, y)
        X_star = np.column_stack([np.ones(M), rng.normal(size=(M, p - 1))])
        b0 = np.array([0.3, -0.7, 0.0])
        prior = _fixed_prior(obs, X_star, b0, tau)
        Delta = tau * X_star.T @ X_star / M
        expected = np.linalg.solve(X.T @ X + Delta, X.T @ y + Delta @ b0)
        np.testing.assert_allclose(fit_map(obs, GAUSS, prior).beta_hat, expected, atol=1e-10)


class TestFitMap:
    def test_balanced_intercept(self):
        res = fit_map(Dataset(np.ones((4, 1)), [1.0, 1.0, 0.0, 0.0]), BERN)
        assert res.converged and res.beta_hat[0] == pytest.approx(0.0, abs=1e-14)

    def test_separated_flat_diverges(self):
        res = fit_map(_separated(), BERN)
        assert not res.converged
        assert np.linalg.norm(res.beta_hat) > 1e3
        assert res.diverged
        # monotone likelihood along the run
        assert np.all(np.diff(res.trace) >= -1e-12)

    def test_separated_catalytic_converges(self):
        d = _separated()
        prior = catalytic_prior(d, BERN, tau=d.p, M=400, seed=0)
        res = fit_map(d, BERN, prior)
        assert res.converged and np.all(np.isfinite(res.beta_hat))
        assert res.final_grad_norm <= 1e-8

    def test_rank_deficient_raises(self):
        X = np.column_stack([np.ones(6), np.ones(6)])
        with pytest.raises(SingularSystemError):
            fit_map(Dataset(X, [1.0, 0, 1, 0, 1, 0]), BERN)

    def test_bad_prior_type(self):
        with pytest.raises(TypeError):
            fit_map(Dataset(np.ones((2, 1)), [1.0, 0.0]), BERN, prior=3)

    def test_converged_implies_tolerance(self):
        res = fit_map(_logistic(80, 3, 2), BERN, tol=1e-9)
        assert res.converged and res.final_grad_norm <= 1e-9

    def test_shrinkage_limits(self):
        d = _logistic(60, 3, 3)
        mle = fit_map(d, BERN).beta_hat
        big = catalytic_prior(d, BERN, [1], tau=1e6, M=400, seed=1)
        simple = big.provenance.sources[0][0].coefficients
        np.testing.assert_allclose(fit_map(d, BERN, big).beta_hat, simple, atol=1e-3)
        small = catalytic_prior(d, BERN, [1], tau=1e-9, M=400, seed=1)
        np.testing.assert_allclose(fit_map(d, BERN, small).beta_hat, mle, atol=1e-6)

    def test_affine_invariance(self):
        rng = np.random.default_rng(9)
        d = _logistic(50, 3, 4)
        X_star = np.column_stack([np.ones(100), rng.normal(size=(100, 2))])
        b0 = np.array([0.2, 0.0, 0.0])
        while True:
            A = rng.normal(size=(3, 3))
            if np.linalg.cond(A) <= 1e3:
                break
        base = fit_map(d, BERN, _fixed_prior(d, X_star, b0, 3.0, BERN)).beta_hat
        dA = d.with_covariates(d.covariates @ A)
        # same synthetic responses, transformed covariates
        prior = _fixed_prior(d, X_star, b0, 3.0, BERN)
        synth = prior.synthetic.with_covariates(X_star @ A)
        moved = fit_map(dA, BERN, CatalyticPrior(synth, 3.0, None)).beta_hat
        np.testing.assert_allclose(moved, np.linalg.solve(A, base), atol=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_monotone_newton(self, seed):
        d = _logistic(40, 3, seed)
        prior = catalytic_prior(d, BERN, tau=3.0, M=400, seed=seed)
        res = fit_map(d, BERN, prior)
        assert np.all(np.diff(res.trace) >= -1e-9 * (1 + abs(res.trace[0])))

    def test_json(self):
        d = fit_map(Dataset(np.ones((4, 1)), [1.0, 1.0, 0.0, 0.0]), BERN).to_dict()
        assert d["prior"] == "flat" and d["converged"] is True


class TestStandardize:
    def test_binary_centered_only(self):
        X = np.column_stack([np.ones(4), [0.0, 1.0, 1.0, 1.0]])
        out, tr = standardize(Dataset(X, np.zeros(4)))
        np.testing.assert_allclose(out.covariates[:, 1], [-0.75, 0.25, 0.25, 0.25])
        assert tr.binary[1] and tr.scale[1] == 1.0
        np.testing.assert_array_equal(out.covariates[:, 0], 1.0)

    def test_arithmetic(self):
        X = np.column_stack([np.ones(3), [0.0, 2.0, 4.0]])
        out, _ = standardize(Dataset(X, np.zeros(3)))
        np.testing.assert_allclose(out.covariates[:, 1], [-0.6124, 0.0, 0.6124], atol=1e-4)
        # sd 0.5 exactly, population convention
        assert out.covariates[:, 1].std() == pytest.approx(0.5, abs=1e-15)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.ones(10), rng.normal(size=(10, 2)) * 7 + 3])
        d = Dataset(X, np.zeros(10))
        out, tr = standardize(d)
        np.testing.assert_allclose(tr.invert(out).covariates, X, atol=1e-12)

    def test_zero_variance(self):
        X = np.column_stack([np.ones(3), [2.0, 2.0, 2.0]])
        with pytest.raises(ValueError):
            standardize(Dataset(X, np.zeros(3)))

    def test_jacobian_maps_predictions(self):
        rng = np.random.default_rng(2)
        X = np.column_stack([np.ones(10), rng.normal(size=(10, 2)) * 3 + 1])
        d = Dataset(X, np.zeros(10))
        out, tr = standardize(d)
        b = rng.normal(size=3)
        np.testing.assert_allclose(out.covariates @ b, X @ tr.coef_to_original(b), atol=1e-12)


class TestCauchy:
    def test_balanced_intercept(self):
        res = fit_cauchy_map(Dataset(np.ones((4, 1)), [1.0, 1.0, 0.0, 0.0]))
        assert res.beta_hat[0] == pytest.approx(0.0, abs=1e-12)

    def test_separated_finite(self):
        res = fit_cauchy_map(_separated())
        assert res.converged and np.all(np.isfinite(res.beta_hat))
        assert np.linalg.norm(res.beta_hat) < 1e3

    def test_local_optimality_probe(self):
        d = _logistic(40, 3, 11)
        res = fit_cauchy_map(d)
        std, tr = standardize(d)
        scales = np.array([10.0, 2.5, 2.5])
        obj = LogPosterior(std, BERN, cauchy_log_prior(scales))
        b_std = np.linalg.solve(tr.jacobian(), res.beta_hat)
        f0 = obj(b_std)
        for j in range(3):
            e = np.eye(3)[j] * 1e-3
            assert f0 >= obj(b_std + e) and f0 >= obj(b_std - e)

    def test_intercept_scale_switch(self):
        d = _logistic(15, 3, 7)
        a = fit_cauchy_map(d).beta_hat
        b = fit_cauchy_map(d, intercept_scale=2.5).beta_hat
        assert not np.allclose(a, b)

    def test_rejects_nonlogistic(self):
        with pytest.raises(ValueError):
            fit_cauchy_map(Dataset(np.ones((2, 1)), [2.0, 0.0]))

    def test_penalty_derivatives(self):
        pen = cauchy_log_prior([1.5, 2.5])
        b = np.array([0.7, -3.0])
        v, g, H = pen(b)
        h = 1e-6
        fd = [(pen(b + h * e)[0] - pen(b - h * e)[0]) / (2 * h) for e in np.eye(2)]
        np.testing.assert_allclose(g, fd, rtol=1e-7)
        fdH = [(pen(b + h * e)[1] - pen(b - h * e)[1]) / (2 * h) for e in np.eye(2)]
        np.testing.assert_allclose(H, np.array(fdH), atol=1e-7)
        assert v == pytest.approx(-np.log1p((0.7 / 1.5) ** 2) - np.log1p((3 / 2.5) ** 2))


def test_catalytic_weights_enter_likelihood():
    d = _logistic(30, 3, 0)
    prior = catalytic_prior(d, BERN, tau=3.0, M=400)
    lp = log_posterior(d, BERN, prior)
    b = np.array([0.1, 0.2, -0.3])
    assert lp(b) == pytest.approx(log_likelihood(BERN, b, d) + prior.log_density(b), abs=1e-12)
