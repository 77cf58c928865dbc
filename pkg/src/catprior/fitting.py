"""Posterior fits on combined weighted data.

Linear-gaussian targets get the exact closed-form posterior; everything
else is a Newton MAP on the weighted log posterior. The Cauchy baseline
for logistic regression lives here too since it shares the solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._newton import NewtonError, newton_maximize
from .core import Dataset, ModelFamily, log_likelihood, log_likelihood_grad_hess
from .synth import CatalyticPrior

DIVERGENCE_NORM = 1e3


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class LinearPosterior:
    mean: np.ndarray
    covariance: np.ndarray

    def to_dict(self) -> dict:
        return {
            "kind": "linear_posterior",
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
        }


@dataclass(frozen=True, eq=False)
class MapResult:
    beta_hat: np.ndarray
    neg_hessian_at_mode: np.ndarray
    converged: bool
    iterations: int
    final_grad_norm: float
    trace: tuple = field(default=())
    message: str = ""
    prior: str = "flat"

    @property
    def diverged(self) -> bool:
        """Non-converged, or an iterate large enough to signal separation."""
        return (not self.converged) or bool(np.linalg.norm(self.beta_hat) > DIVERGENCE_NORM)

    def to_dict(self) -> dict:
        return {
            "kind": "map",
            "prior": self.prior,
            "mean": self.beta_hat.tolist(),
            "neg_hessian": self.neg_hessian_at_mode.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "beta_norm": float(np.linalg.norm(self.beta_hat)),
            "message": self.message,
        }


class LogPosterior:
    """Weighted log posterior over a (combined) dataset.

    ``penalty``, if given, maps ``beta`` to ``(value, grad, hess)`` of an
    extra log-prior term.
    """

    def __init__(self, data: Dataset, family: ModelFamily, penalty=None):
        self.data = data
        self.family = family
        self.penalty = penalty

    @property
    def p(self) -> int:
        return self.data.p

    def __call__(self, beta) -> float:
        val = log_likelihood(self.family, beta, self.data)
        if self.penalty is not None:
            val += self.penalty(beta)[0]
        return val

    def grad_hess(self, beta):
        g, H = log_likelihood_grad_hess(self.family, beta, self.data)
        if self.penalty is not None:
            _, pg, pH = self.penalty(beta)
            g = g + pg
            H = H + pH
        return g, H


def _combined(observed: Dataset, prior) -> tuple[Dataset, str]:
    if prior is None or (isinstance(prior, str) and prior == "flat"):
        return observed, "flat"
    if isinstance(prior, CatalyticPrior):
        return prior.combine(observed), "catalytic"
    raise TypeError(f"prior must be 'flat', None or a CatalyticPrior, got {prior!r}")


def fit_linear_posterior(observed: Dataset, prior: CatalyticPrior, sigma: float) -> LinearPosterior:
    """Exact posterior of a gaussian linear model under a catalytic prior.

    Solves the weighted normal equations of observed plus synthetic rows;
    the covariance is ``sigma**2`` times the inverse weighted Gram matrix.
    """
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma}")
    data, _ = _combined(observed, prior)
    X, y, w = data.covariates, data.response, data.weights
    gram = (X.T * w) @ X
    rhs = X.T @ (w * y)
    try:
        factor = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError:
        rank = np.linalg.matrix_rank(gram)
        raise SingularSystemError(
            f"combined Gram matrix is singular: rank {rank} < p={data.p}") from None
    mean = cho_solve(factor, rhs)
    cov = sigma ** 2 * cho_solve(factor, np.eye(data.p))
    cov = 0.5 * (cov + cov.T)
    return LinearPosterior(mean, cov)


def fit_map(observed: Dataset, family: ModelFamily, prior=None, max_iter: int = 100,
            tol: float = 1e-8, beta0=None) -> MapResult:
    """Posterior mode on observed rows plus (optionally) catalytic rows.

    With a flat prior this is the weighted MLE. Separated logistic data
    come back with ``converged=False`` and a large iterate rather than an
    exception; a genuinely singular Newton system raises
    :class:`SingularSystemError`.
    """
    data, label = _combined(observed, prior)
    rank = np.linalg.matrix_rank(data.covariates * np.sqrt(data.weights)[:, None])
    if rank < data.p:
        err = SingularSystemError(f"{label} MAP: design has rank {rank} < p={data.p}")
        err.result = None
        raise err
    post = LogPosterior(data, family)
    start = np.zeros(data.p) if beta0 is None else np.asarray(beta0, dtype=float)
    try:
        res = newton_maximize(post, post.grad_hess, start, max_iter=max_iter, tol=tol,
                              on_singular="lstsq")
    except NewtonError as exc:
        err = SingularSystemError(f"{label} MAP: {exc}")
        err.result = _to_map(exc.result, label)
        raise err from None
    return _to_map(res, label)


def _to_map(res, label: str) -> MapResult:
    return MapResult(res.beta, res.neg_hessian, res.converged, res.iterations,
                     res.grad_norm, tuple(res.trace), res.message, label)


def log_posterior(observed: Dataset, family: ModelFamily, prior=None) -> LogPosterior:
    data, _ = _combined(observed, prior)
    return LogPosterior(data, family)


# -- standardisation and the Cauchy baseline ----------------------------------

@dataclass(frozen=True, eq=False)
class Standardization:
    """Per-column ``x -> (x - center) / scale``."""

    center: np.ndarray
    scale: np.ndarray
    intercept: int | None
    binary: np.ndarray

    def apply(self, data: Dataset) -> Dataset:
        return data.with_covariates((data.covariates - self.center) / self.scale)

    def invert(self, data: Dataset) -> Dataset:
        return data.with_covariates(data.covariates * self.scale + self.center)

    def jacobian(self) -> np.ndarray:
        """``J`` with ``beta_original = J @ beta_standardized``."""
        p = self.center.size
        J = np.diag(1.0 / self.scale)
        if self.intercept is not None:
            J[self.intercept] -= self.center / self.scale
            J[self.intercept, self.intercept] = 1.0
        elif np.any(self.center != 0):
            raise ValueError("centred covariates need an intercept to map coefficients back")
        return J if p else J.reshape(0, 0)

    def coef_to_original(self, beta) -> np.ndarray:
        return self.jacobian() @ np.asarray(beta, dtype=float)


def standardize(data: Dataset, target_sd: float = 0.5) -> tuple[Dataset, Standardization]:
    """Centre binary columns; centre and rescale the rest to sd ``target_sd``.

    The intercept column is left alone. A constant non-binary column cannot
    be rescaled and raises ``ValueError``.
    """
    X = data.covariates
    p = data.p
    icpt = data.intercept_index
    center = np.zeros(p)
    scale = np.ones(p)
    binary = np.zeros(p, dtype=bool)
    for j in range(p):
        if j == icpt:
            continue
        col = X[:, j]
        center[j] = col.mean()
        if np.all((col == 0) | (col == 1)):
            binary[j] = True
            continue
        sd = col.std()
        if sd == 0:
            raise ValueError(f"column {data.column_names[j]!r} has zero variance")
        scale[j] = sd / target_sd
    tr = Standardization(center, scale, icpt, binary)
    return tr.apply(data), tr


def cauchy_log_prior(scales):
    """Independent ``Cauchy(0, s_j)`` log density (up to a constant)."""
    s2 = np.asarray(scales, dtype=float) ** 2

    def penalty(beta):
        b2 = beta ** 2
        val = -np.sum(np.log1p(b2 / s2))
        grad = -2.0 * beta / (s2 + b2)
        hess = np.diag(-2.0 * (s2 - b2) / (s2 + b2) ** 2)
        return val, grad, hess

    return penalty


def fit_cauchy_map(observed: Dataset, scale: float = 2.5, intercept_scale: float = 10.0,
                   max_iter: int = 100, tol: float = 1e-8) -> MapResult:
    """Logistic MAP under independent Cauchy coefficient priors.

    Covariates are standardised first (binary columns centred, others to
    mean 0 and sd 0.5); the intercept gets scale ``intercept_scale``. The
    returned coefficients and curvature are on the original covariate scale.
    """
    if np.any((observed.response < 0) | (observed.response > 1)):
        raise ValueError("Cauchy baseline is for logistic data")
    std_data, tr = standardize(observed)
    scales = np.full(observed.p, float(scale))
    if tr.intercept is not None:
        scales[tr.intercept] = float(intercept_scale)
    post = LogPosterior(std_data, ModelFamily.bernoulli(), cauchy_log_prior(scales))
    # The Cauchy log density is not concave in the tails, so damp when needed.
    res = newton_maximize(post, post.grad_hess, np.zeros(observed.p), max_iter=max_iter,
                          tol=tol, damping=True)
    J = tr.jacobian()
    beta = J @ res.beta
    # curvature in original coordinates: J^{-T} H J^{-1}
    Jinv_T_H = np.linalg.solve(J.T, res.neg_hessian)
    neg_hess = np.linalg.solve(J.T, Jinv_T_H.T).T
    neg_hess = 0.5 * (neg_hess + neg_hess.T)
    return MapResult(beta, neg_hess, res.converged, res.iterations, res.grad_norm,
                     tuple(res.trace), res.message, "cauchy")
