"""Unit and average log-probability-ratio effects for paired logistic arms."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import DimensionError, as_matrix, as_vector
from .posterior import SampleMatrix, posterior_summary


@dataclass(frozen=True, eq=False)
class ArmFits:
    """Posterior objects for the treated and control arms.

    Arms are fit independently; the catalytic prior factorises across them.
    """

    beta_t: object
    beta_c: object
    covariate_names: tuple = field(default=())


@dataclass(frozen=True, eq=False)
class EffectResult:
    gamma_avg: float
    group_label: str = "All"
    per_unit: np.ndarray | None = None
    draws: np.ndarray | None = None

    def summary(self, level: float = 0.99):
        if self.draws is None:
            raise ValueError("no posterior draws to summarise")
        return posterior_summary(self.draws, level)

    def to_dict(self, level: float | None = None) -> dict:
        d = {"group": self.group_label, "gamma_avg": self.gamma_avg}
        if self.draws is not None:
            d["n_draws"] = int(self.draws.size)
            if level is not None:
                d["summary"] = self.summary(level).to_dict()
        return d


def log_sigmoid(eta):
    return -np.logaddexp(0.0, -np.asarray(eta, dtype=float))


def log_prob_ratio(x, beta_t, beta_c):
    """``log P(Y(1)=1 | x) - log P(Y(0)=1 | x)`` under the two logistic arms.

    ``x`` may be a single covariate vector or a matrix of rows.
    """
    x = np.asarray(x, dtype=float)
    beta_t = as_vector(beta_t, "beta_t")
    beta_c = as_vector(beta_c, "beta_c", beta_t.size)
    if x.shape[-1] != beta_t.size:
        raise DimensionError(f"x has {x.shape[-1]} covariates, coefficients have {beta_t.size}")
    return log_sigmoid(x @ beta_t) - log_sigmoid(x @ beta_c)


def _mask_rows(X, mask):
    X = as_matrix(X, "X")
    if mask is None:
        return X
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (X.shape[0],):
        raise DimensionError(f"mask has shape {mask.shape}, X has {X.shape[0]} rows")
    if not mask.any():
        raise ValueError("mask selects no rows")
    return X[mask]


def avg_effect(X, mask, beta_t, beta_c, label: str = "All") -> EffectResult:
    """Average of the unit log-probability ratios over the masked rows."""
    rows = _mask_rows(X, mask)
    gamma = log_prob_ratio(rows, beta_t, beta_c)
    return EffectResult(float(gamma.mean()), label, gamma)


def posterior_effect_distribution(X, mask, samples_t, samples_c, label: str = "All") -> EffectResult:
    """Posterior draws of the average effect, pairing draw k of each arm."""
    dt = samples_t.draws if isinstance(samples_t, SampleMatrix) else as_matrix(samples_t)
    dc = samples_c.draws if isinstance(samples_c, SampleMatrix) else as_matrix(samples_c)
    if dt.shape[0] != dc.shape[0]:
        raise DimensionError(f"arms have {dt.shape[0]} and {dc.shape[0]} draws")
    if dt.shape[1] != dc.shape[1]:
        raise DimensionError("arms disagree on the number of coefficients")
    rows = _mask_rows(X, mask)
    draws = (log_sigmoid(rows @ dt.T) - log_sigmoid(rows @ dc.T)).mean(axis=0)
    return EffectResult(float(draws.mean()), label, None, draws)
