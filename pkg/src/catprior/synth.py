"""Synthetic data generation and catalytic prior assembly.

A catalytic prior is the weighted likelihood of ``M`` synthetic rows, each
carrying weight ``tau / M``. Covariates come from a :class:`CovariateScheme`;
responses come from one or more fitted simple models (a per-row mixture
when there are several).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _rng
from ._validation import DimensionError, as_matrix
from .core import Dataset, ModelFamily, SimpleModelSpec, fit_simple_model, log_likelihood

MARGINAL = "marginal_resample"
JOINT = "joint_resample"
FIXED = "fixed_matrix"
EXPECTED = "expected_value"
STOCHASTIC = "stochastic"


def default_tau(p: int) -> float:
    return float(p)


def default_M(p: int) -> int:
    return max(400, 4 * p)


@dataclass(frozen=True, eq=False)
class CovariateScheme:
    kind: str = MARGINAL
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (MARGINAL, JOINT, FIXED):
            raise ValueError(f"unknown covariate scheme {self.kind!r}")
        if self.kind == FIXED:
            if self.matrix is None:
                raise ValueError("fixed_matrix scheme needs a matrix")
            m = as_matrix(self.matrix, "fixed matrix").copy()
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
            if np.linalg.matrix_rank(m) < m.shape[1]:
                warnings.warn("fixed synthetic covariate matrix is rank deficient; "
                              "the prior may be improper", stacklevel=2)
        elif self.matrix is not None:
            raise ValueError(f"{self.kind} takes no matrix")

    @classmethod
    def fixed(cls, matrix) -> "CovariateScheme":
        return cls(FIXED, matrix)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.matrix is not None:
            d["matrix"] = self.matrix.tolist()
        return d

    @classmethod
    def from_dict(cls, d) -> "CovariateScheme":
        if isinstance(d, str):
            return cls(d)
        return cls(d["kind"], None if d.get("matrix") is None else np.asarray(d["matrix"]))


@dataclass(frozen=True, eq=False)
class SynthConfig:
    """How to build one catalytic prior.

    ``sources`` is a sequence of ``(SimpleModelSpec, mixture_weight)`` pairs;
    mixture weights must sum to one. ``mode=None`` resolves to expected
    values for bernoulli sources and stochastic draws for gaussian ones.
    """

    M: int
    tau: float
    sources: tuple
    scheme: CovariateScheme = field(default_factory=CovariateScheme)
    mode: str | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        sources = []
        for item in self.sources:
            spec, weight = item if isinstance(item, tuple) else (item, None)
            sources.append((spec, weight))
        if not sources:
            raise ValueError("need at least one simple-model source")
        if len(sources) == 1 and sources[0][1] is None:
            sources = [(sources[0][0], 1.0)]
        weights = np.array([w for _, w in sources], dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must be >= 0 and sum to 1, got {weights}")
        kinds = {spec.family.kind for spec, _ in sources}
        if len(kinds) != 1:
            raise ValueError("all sources must share one family")
        if len({spec.p for spec, _ in sources}) != 1:
            raise DimensionError("sources disagree on the number of covariates")
        mode = self.mode
        if mode is None:
            mode = EXPECTED if kinds == {"bernoulli"} else STOCHASTIC
        if mode not in (EXPECTED, STOCHASTIC):
            raise ValueError(f"unknown response mode {mode!r}")
        if self.M < sources[0][0].p:
            warnings.warn(f"M={self.M} is smaller than p={sources[0][0].p}; "
                          "the prior may be improper", stacklevel=2)
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "sources", tuple((s, float(w)) for s, w in sources))
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def family(self) -> ModelFamily:
        return self.sources[0][0].family

    @property
    def p(self) -> int:
        return self.sources[0][0].p

    @property
    def mixture_weights(self) -> np.ndarray:
        return np.array([w for _, w in self.sources])

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "tau": self.tau,
            "scheme": self.scheme.to_dict(),
            "mode": self.mode,
            "seed": self.seed,
            "sources": [{"model": s.to_dict(), "weight": w} for s, w in self.sources],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        sources = tuple((SimpleModelSpec.from_dict(s["model"]), float(s["weight"]))
                        for s in d["sources"])
        return cls(d["M"], d["tau"], sources, CovariateScheme.from_dict(d.get("scheme", MARGINAL)),
                   d.get("mode"), d.get("seed", 0))

    @classmethod
    def from_json(cls, text: str) -> "SynthConfig":
        return cls.from_dict(json.loads(text))


def gen_covariates(observed: Dataset, scheme: CovariateScheme, M: int, stream) -> np.ndarray:
    """Draw an ``M x p`` synthetic covariate matrix."""
    if scheme.kind == FIXED:
        return np.array(scheme.matrix, copy=True)
    X = observed.covariates
    n, p = X.shape
    if n < 1:
        raise ValueError("need at least one observed row to resample covariates")
    if M < p:
        warnings.warn(f"M={M} < p={p}: the prior may be improper", stacklevel=2)
    rng = _rng.generator(stream)
    if scheme.kind == JOINT:
        return X[rng.integers(0, n, size=M)]
    idx = rng.integers(0, n, size=(M, p))
    return np.take_along_axis(X, idx, axis=0)


def gen_responses(X_star, config: SynthConfig, stream) -> np.ndarray:
    """Synthetic responses for each row of ``X_star``.

    Source selection and response noise use separate child streams, so a
    degenerate mixture ``(1, 0, ...)`` reproduces the single-source output.
    """
    X_star = as_matrix(X_star, "X_star")
    M = X_star.shape[0]
    if X_star.shape[1] != config.p:
        raise DimensionError(f"X_star has {X_star.shape[1]} columns, sources expect {config.p}")
    if len(config.sources) == 1:
        which = np.zeros(M, dtype=int)
    else:
        sel = _rng.generator(_rng.substream(stream, "mixture-select"))
        which = sel.choice(len(config.sources), size=M, p=config.mixture_weights)

    mean = np.empty(M)
    scale = np.ones(M)
    for k, (spec, _) in enumerate(config.sources):
        rows = which == k
        if np.any(rows):
            mean[rows] = spec.predict_mean(X_star[rows])
            if spec.family.kind == "gaussian":
                scale[rows] = spec.family.sigma
    if config.mode == EXPECTED:
        return mean
    noise = _rng.generator(_rng.substream(stream, "response-noise"))
    if config.family.kind == "bernoulli":
        return (noise.random(M) < mean).astype(float)
    return mean + scale * noise.standard_normal(M)


@dataclass(frozen=True, eq=False)
class CatalyticPrior:
    """Synthetic rows, each weighted ``tau / M``."""

    synthetic: Dataset
    tau: float
    provenance: SynthConfig

    @property
    def M(self) -> int:
        return self.synthetic.n

    @property
    def weight(self) -> float:
        return self.tau / self.M

    def combine(self, observed: Dataset) -> Dataset:
        """Observed rows (their own weights) stacked on the weighted synthetic rows."""
        if observed.n == 0:
            return self.synthetic
        return observed.concat(self.synthetic)

    def log_density(self, beta) -> float:
        """Unnormalised log prior density at ``beta``."""
        return log_likelihood(self.provenance.family, beta, self.synthetic)


def build_catalytic_prior(observed: Dataset, config: SynthConfig) -> CatalyticPrior:
    if config.p != observed.p:
        raise DimensionError(f"sources expect p={config.p}, observed data has p={observed.p}")
    root = _rng.as_stream(config.seed)
    X_star = gen_covariates(observed, config.scheme, config.M, _rng.substream(root, "covariates"))
    if X_star.shape != (config.M, config.p):
        raise DimensionError(f"synthetic covariates have shape {X_star.shape}, "
                             f"expected {(config.M, config.p)}")
    y_star = gen_responses(X_star, config, _rng.substream(root, "responses"))
    w = np.full(config.M, config.tau / config.M)
    synthetic = Dataset(X_star, y_star, None, w, observed.column_names)
    return CatalyticPrior(synthetic, config.tau, config)


def catalytic_prior(
    observed: Dataset,
    family: ModelFamily,
    subset: Sequence[int] = (),
    tau: float | None = None,
    M: int | None = None,
    scheme: CovariateScheme | str = MARGINAL,
    mode: str | None = None,
    seed: int = 0,
) -> CatalyticPrior:
    """Fit one simple model on ``subset`` (plus intercept) and build its prior."""
    spec = fit_simple_model(observed, subset, family)
    if isinstance(scheme, str):
        scheme = CovariateScheme(scheme)
    config = SynthConfig(
        M=default_M(observed.p) if M is None else M,
        tau=default_tau(observed.p) if tau is None else tau,
        sources=((spec, 1.0),),
        scheme=scheme,
        mode=mode,
        seed=seed,
    )
    return build_catalytic_prior(observed, config)
