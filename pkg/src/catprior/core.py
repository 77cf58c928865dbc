"""Data containers and the target-model likelihoods.

Everything downstream works on a :class:`Dataset` (covariates with an
explicit intercept column, responses, optional treatment, per-row weights)
and a :class:`ModelFamily` (gaussian with known sigma, or bernoulli).
Bernoulli responses may be fractional: the kernel ``y*eta - log(1+e^eta)``
is used as a weighted-likelihood term, which is what lets expected-value
synthetic responses enter the fit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.special import expit

from ._newton import NewtonError, newton_maximize
from ._validation import (
    DimensionError,
    as_vector,
    check_finite,
    check_positive_weights,
    readonly,
)

INTERCEPT = "__intercept__"
RESPONSE = "__y__"
TREATMENT = "__z__"
WEIGHT = "__w__"
RESERVED = (RESPONSE, TREATMENT, WEIGHT)

_LOG_2PI = math.log(2.0 * math.pi)


class RankDeficientError(ValueError):
    pass


class DegenerateResponseError(ValueError):
    pass


@dataclass(frozen=True)
class ModelFamily:
    """Target-model family: ``gaussian`` (known ``sigma``) or ``bernoulli``."""

    kind: str
    sigma: float | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.sigma is None or not np.isfinite(self.sigma) or self.sigma <= 0:
                raise ValueError(f"gaussian sigma must be finite and > 0, got {self.sigma}")
            object.__setattr__(self, "sigma", float(self.sigma))
        elif self.kind == "bernoulli":
            if self.sigma is not None:
                raise ValueError("bernoulli family takes no sigma")
        else:
            raise ValueError(f"unknown family {self.kind!r}")

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "ModelFamily":
        return cls("gaussian", sigma)

    @classmethod
    def bernoulli(cls) -> "ModelFamily":
        return cls("bernoulli")

    def mean(self, eta: np.ndarray) -> np.ndarray:
        return expit(eta) if self.kind == "bernoulli" else np.asarray(eta, dtype=float)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.sigma is not None:
            d["sigma"] = self.sigma
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelFamily":
        return cls(d["kind"], d.get("sigma"))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed (or synthetic) rows.

    Arrays are copied and frozen on construction; a Dataset is immutable.
    """

    covariates: np.ndarray
    response: np.ndarray
    treatment: np.ndarray | None = None
    weights: np.ndarray | None = None
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.covariates, dtype=float)
        if X.ndim != 2:
            raise DimensionError(f"covariates must be 2-d, got shape {X.shape}")
        n, p = X.shape
        check_finite(X, "covariates")
        y = check_finite(as_vector(self.response, "response", n), "response")
        w = np.ones(n) if self.weights is None else as_vector(self.weights, "weights", n)
        check_positive_weights(w)
        z = None
        if self.treatment is not None:
            z = as_vector(self.treatment, "treatment", n)
            if not np.all((z == 0) | (z == 1)):
                raise ValueError("treatment must be 0/1")
            z = readonly(z)
        names = self.column_names
        if names is None:
            names = tuple(f"x{j}" for j in range(p))
        names = tuple(str(c) for c in names)
        if len(names) != p:
            raise DimensionError(f"{len(names)} column names for {p} columns")
        object.__setattr__(self, "covariates", readonly(X))
        object.__setattr__(self, "response", readonly(y))
        object.__setattr__(self, "weights", readonly(w))
        object.__setattr__(self, "treatment", z)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    @property
    def intercept_index(self) -> int | None:
        """Index of the intercept column, if there is one."""
        if INTERCEPT in self.column_names:
            return self.column_names.index(INTERCEPT)
        if self.n and self.p and np.all(self.covariates[:, 0] == 1.0):
            return 0
        return None

    @classmethod
    def empty(cls, column_names: Sequence[str]) -> "Dataset":
        return cls(np.empty((0, len(column_names))), np.empty(0), column_names=tuple(column_names))

    def rows(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            self.covariates[index],
            self.response[index],
            None if self.treatment is None else self.treatment[index],
            self.weights[index],
            self.column_names,
        )

    def arm(self, z: int) -> "Dataset":
        if self.treatment is None:
            raise ValueError("dataset has no treatment column")
        return self.rows(np.flatnonzero(self.treatment == z))

    def with_weights(self, weights) -> "Dataset":
        w = np.broadcast_to(np.asarray(weights, dtype=float), (self.n,))
        return Dataset(self.covariates, self.response, self.treatment, w, self.column_names)

    def with_covariates(self, covariates, column_names=None) -> "Dataset":
        return Dataset(covariates, self.response, self.treatment, self.weights,
                       column_names if column_names is not None else self.column_names)

    def concat(self, other: "Dataset") -> "Dataset":
        if other.p != self.p:
            raise DimensionError(f"cannot stack p={self.p} with p={other.p}")
        z = None
        if self.treatment is not None and other.treatment is not None:
            z = np.concatenate([self.treatment, other.treatment])
        return Dataset(
            np.vstack([self.covariates, other.covariates]),
            np.concatenate([self.response, other.response]),
            z,
            np.concatenate([self.weights, other.weights]),
            self.column_names,
        )

    def __repr__(self):
        return f"Dataset(n={self.n}, p={self.p}, columns={list(self.column_names)})"


@dataclass(frozen=True, eq=False)
class SimpleModelSpec:
    """A fitted simple model: family, covariate subset and coefficients.

    ``coefficients`` has full length p and is exactly zero off ``subset``.
    """

    family: ModelFamily
    subset: tuple[int, ...]
    coefficients: np.ndarray
    column_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        beta = as_vector(self.coefficients, "coefficients")
        subset = tuple(sorted(int(j) for j in self.subset))
        if not subset:
            raise ValueError("subset must be non-empty")
        if subset[0] < 0 or subset[-1] >= beta.size:
            raise DimensionError(f"subset {subset} out of range for p={beta.size}")
        off = np.ones(beta.size, dtype=bool)
        off[list(subset)] = False
        if np.any(beta[off] != 0.0):
            raise ValueError("coefficients must be exactly 0 outside the subset")
        object.__setattr__(self, "subset", subset)
        object.__setattr__(self, "coefficients", readonly(beta))

    @property
    def p(self) -> int:
        return self.coefficients.size

    def predict_mean(self, X) -> np.ndarray:
        return self.family.mean(np.asarray(X, dtype=float) @ self.coefficients)

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_dict(),
            "subset": list(self.subset),
            "coefficients": self.coefficients.tolist(),
            "column_names": None if self.column_names is None else list(self.column_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimpleModelSpec":
        names = d.get("column_names")
        return cls(ModelFamily.from_dict(d["family"]), tuple(d["subset"]),
                   np.asarray(d["coefficients"], dtype=float),
                   None if names is None else tuple(names))


def _check_inputs(family: ModelFamily, beta, data: Dataset) -> np.ndarray:
    beta = as_vector(beta, "beta", data.p)
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta contains non-finite values")
    if family.kind == "bernoulli" and np.any((data.response < 0) | (data.response > 1)):
        raise ValueError("bernoulli responses must lie in [0, 1]")
    return beta


def log_likelihood(family: ModelFamily, beta, data: Dataset) -> float:
    """Weighted log-likelihood ``sum_i w_i log f(y_i | x_i, beta)``."""
    beta = _check_inputs(family, beta, data)
    eta = data.covariates @ beta
    y, w = data.response, data.weights
    if family.kind == "bernoulli":
        terms = y * eta - np.logaddexp(0.0, eta)
    else:
        s2 = family.sigma ** 2
        terms = -0.5 * (_LOG_2PI + np.log(s2)) - 0.5 * (y - eta) ** 2 / s2
    return float(w @ terms)


def log_likelihood_grad_hess(family: ModelFamily, beta, data: Dataset):
    """Analytic gradient and Hessian of :func:`log_likelihood` in ``beta``."""
    beta = _check_inputs(family, beta, data)
    X, y, w = data.covariates, data.response, data.weights
    eta = X @ beta
    if family.kind == "bernoulli":
        mu = expit(eta)
        resid = y - mu
        curv = w * mu * (1.0 - mu)
    else:
        s2 = family.sigma ** 2
        resid = (y - eta) / s2
        curv = w / s2
    grad = X.T @ (w * resid)
    hess = -(X.T * curv) @ X
    hess = 0.5 * (hess + hess.T)
    return grad, hess


def fit_simple_model(data: Dataset, subset: Sequence[int], family: ModelFamily,
                     max_iter: int = 100, tol: float = 1e-10) -> SimpleModelSpec:
    """Weighted MLE of ``family`` restricted to the columns in ``subset``.

    The intercept column, when the dataset has one, is always added to the
    subset.
    """
    S = sorted({int(j) for j in subset})
    icpt = data.intercept_index
    if icpt is not None and icpt not in S:
        S = sorted(S + [icpt])
    if not S:
        raise ValueError("subset must be non-empty")
    if data.n == 0:
        raise ValueError("cannot fit a simple model to an empty dataset")
    Xs = data.covariates[:, S]
    rank = np.linalg.matrix_rank(Xs)
    if rank < len(S):
        raise RankDeficientError(f"covariates on subset {S} have rank {rank} < {len(S)}")
    sub = Dataset(Xs, data.response, None, data.weights)
    w, y = data.weights, data.response

    if family.kind == "gaussian":
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(Xs * sw[:, None], y * sw, rcond=None)
    else:
        ybar = float(w @ y / w.sum())
        if ybar <= 0.0 or ybar >= 1.0:
            raise DegenerateResponseError(
                "bernoulli response is all 0 or all 1; generate expected-value "
                f"synthetic responses directly from the proportion {ybar:g} instead")
        start = np.zeros(len(S))
        if icpt is not None:
            start[S.index(icpt)] = math.log(ybar / (1.0 - ybar))
        try:
            res = newton_maximize(
                lambda b: log_likelihood(family, b, sub),
                lambda b: log_likelihood_grad_hess(family, b, sub),
                start, max_iter=max_iter, tol=tol)
        except NewtonError as exc:
            raise RankDeficientError(f"simple model on subset {S}: {exc}") from exc
        if not res.converged:
            raise RuntimeError(
                f"simple model on subset {S} did not converge ({res.message}); "
                "the data may be separated on these covariates")
        coef = res.beta
    beta = np.zeros(data.p)
    beta[S] = coef
    return SimpleModelSpec(family, tuple(S), beta, data.column_names)


# -- CSV format --------------------------------------------------------------

def read_csv(path, add_intercept: bool = True) -> Dataset:
    """Read a dataset CSV.

    Reserved columns ``__y__``, ``__z__`` and ``__w__`` hold the response,
    treatment and weights; every other column is a covariate, in file order.
    An all-ones ``__intercept__`` column is prepended unless present.
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    return from_frame(frame, add_intercept=add_intercept)


def from_frame(frame: pd.DataFrame, add_intercept: bool = True) -> Dataset:
    if RESPONSE not in frame.columns:
        raise ValueError(f"dataset needs a {RESPONSE} column")
    cov_cols = [c for c in frame.columns if c not in RESERVED]
    X = frame[cov_cols].to_numpy(dtype=float)
    if add_intercept and INTERCEPT not in cov_cols:
        X = np.column_stack([np.ones(len(frame)), X])
        cov_cols = [INTERCEPT] + cov_cols
    z = frame[TREATMENT].to_numpy(dtype=float) if TREATMENT in frame.columns else None
    w = frame[WEIGHT].to_numpy(dtype=float) if WEIGHT in frame.columns else None
    return Dataset(X, frame[RESPONSE].to_numpy(dtype=float), z, w, tuple(cov_cols))


def to_frame(data: Dataset, include_weights: bool = True) -> pd.DataFrame:
    frame = pd.DataFrame(data.covariates, columns=list(data.column_names))
    frame[RESPONSE] = data.response
    if data.treatment is not None:
        frame[TREATMENT] = data.treatment.astype(int)
    if include_weights:
        frame[WEIGHT] = data.weights
    return frame


def write_csv(data: Dataset, path, include_weights: bool = True) -> Path:
    path = Path(path)
    # repr-precision floats so a read-back is bit-identical
    to_frame(data, include_weights).to_csv(path, index=False, float_format="%.17g")
    return path
