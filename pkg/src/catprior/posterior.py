"""Posterior uncertainty around the MAP.

Laplace approximation at the mode, a plain Gaussian random-walk Metropolis
sampler, and equal-tailed credible summaries.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _rng
from ._validation import as_matrix, as_vector, check_spd


@dataclass(frozen=True, eq=False)
class GaussianApprox:
    mean: np.ndarray
    covariance: np.ndarray

    def sample(self, size: int, stream) -> np.ndarray:
        L = np.linalg.cholesky(self.covariance)
        z = _rng.generator(stream).standard_normal((size, self.mean.size))
        return self.mean + z @ L.T

    def to_dict(self) -> dict:
        return {"kind": "laplace", "mean": self.mean.tolist(),
                "covariance": self.covariance.tolist()}


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """Retained MCMC draws, one row per draw."""

    draws: np.ndarray
    acceptance_rate: float
    seed: int | None
    burn_in: int
    thin: int
    accepted: int = 0
    steps: int = 0

    @property
    def T(self) -> int:
        return self.draws.shape[0]

    @property
    def p(self) -> int:
        return self.draws.shape[1]

    def to_csv(self, path, column_names=None) -> Path:
        names = column_names or [f"beta{j}" for j in range(self.p)]
        path = Path(path)
        header = ",".join(names)
        np.savetxt(path, self.draws, delimiter=",", header=header, comments="", fmt="%.17g")
        return path

    @classmethod
    def from_csv(cls, path) -> "SampleMatrix":
        draws = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(draws, float("nan"), None, 0, 1)

    def to_dict(self) -> dict:
        return {"kind": "mcmc", "mean": self.draws.mean(axis=0).tolist(),
                "n_draws": self.T, "acceptance_rate": self.acceptance_rate,
                "seed": self.seed, "burn_in": self.burn_in, "thin": self.thin}


def laplace_approx(log_post, map_result) -> GaussianApprox:
    """Gaussian at the mode with covariance ``(-H)^{-1}``.

    ``log_post`` needs a ``grad_hess(beta)`` method.
    """
    if not map_result.converged:
        raise ValueError("Laplace approximation needs a converged MAP")
    beta = np.asarray(map_result.beta_hat, dtype=float)
    _, H = log_post.grad_hess(beta)
    try:
        factor = cho_factor(-H, lower=True)
    except np.linalg.LinAlgError:
        raise ValueError("negative Hessian at the mode is not positive definite") from None
    cov = cho_solve(factor, np.eye(beta.size))
    return GaussianApprox(beta.copy(), 0.5 * (cov + cov.T))


def default_proposal(approx: GaussianApprox) -> np.ndarray:
    p = approx.mean.size
    return (2.38 ** 2 / p) * approx.covariance


def rw_metropolis(log_post, init, steps: int, proposal_cov, stream,
                  burn_in: int | None = None, thin: int = 5) -> SampleMatrix:
    """Gaussian random-walk Metropolis.

    ``burn_in`` defaults to 20% of ``steps``. Draws are kept every ``thin``
    steps after burn-in; the acceptance rate counts all steps.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    x = as_vector(init, "init").copy()
    L = check_spd(np.atleast_2d(proposal_cov), "proposal_cov")
    if L.shape[0] != x.size:
        raise ValueError(f"proposal_cov is {L.shape}, init has length {x.size}")
    burn_in = steps // 5 if burn_in is None else int(burn_in)
    if not 0 <= burn_in < steps:
        raise ValueError("burn_in must lie in [0, steps)")

    lp = float(log_post(x))
    if not np.isfinite(lp):
        raise ValueError("log posterior is not finite at the initial point")
    rng = _rng.generator(stream)
    moves = rng.standard_normal((steps, x.size)) @ L.T
    log_u = np.log(rng.random(steps))

    kept = []
    accepted = 0
    for t in range(steps):
        cand = x + moves[t]
        lp_cand = float(log_post(cand))
        if lp_cand - lp > log_u[t]:
            x, lp = cand, lp_cand
            accepted += 1
        if t >= burn_in and (t - burn_in) % thin == 0:
            kept.append(x)
    seed = stream if isinstance(stream, (int, np.integer)) else None
    return SampleMatrix(np.array(kept), accepted / steps, seed, burn_in, thin, accepted, steps)


@dataclass(frozen=True)
class Summary:
    mean: np.ndarray | float
    lower: np.ndarray | float
    upper: np.ndarray | float
    level: float

    def to_dict(self) -> dict:
        conv = (lambda v: v.tolist() if isinstance(v, np.ndarray) else float(v))
        return {"mean": conv(self.mean), "lower": conv(self.lower),
                "upper": conv(self.upper), "level": self.level}


def posterior_summary(samples, level: float = 0.95) -> Summary:
    """Mean and equal-tailed credible interval.

    Quantiles interpolate linearly between order statistics. Accepts a
    :class:`SampleMatrix` (per-column summaries) or a vector of draws.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    draws = samples.draws if isinstance(samples, SampleMatrix) else np.asarray(samples, float)
    if draws.shape[0] < 2:
        raise ValueError("need at least two draws")
    alpha = 1.0 - level
    lo, hi = np.quantile(draws, [alpha / 2, 1 - alpha / 2], axis=0, method="linear")
    mean = draws.mean(axis=0)
    if draws.ndim == 1:
        return Summary(float(mean), float(lo), float(hi), level)
    return Summary(mean, lo, hi, level)


def mc_standard_error(draws, n_batches: int = 40) -> np.ndarray | float:
    """Batch-means Monte Carlo standard error of the draw mean."""
    draws = np.asarray(draws, dtype=float)
    T = draws.shape[0]
    n_batches = min(n_batches, T)
    size = T // n_batches
    if size < 1:
        raise ValueError("too few draws for batch means")
    trimmed = draws[T - size * n_batches:]
    means = trimmed.reshape(n_batches, size, *draws.shape[1:]).mean(axis=1)
    return means.std(axis=0, ddof=1) / np.sqrt(n_batches)


def split_chain_z(draws, n_batches: int = 20) -> np.ndarray:
    """z-scores comparing first- and second-half means of a chain."""
    draws = as_matrix(draws, "draws") if np.ndim(draws) != 1 else np.asarray(draws)[:, None]
    half = draws.shape[0] // 2
    a, b = draws[:half], draws[half:2 * half]
    se = np.sqrt(mc_standard_error(a, n_batches) ** 2 + mc_standard_error(b, n_batches) ** 2)
    return (a.mean(axis=0) - b.mean(axis=0)) / se
