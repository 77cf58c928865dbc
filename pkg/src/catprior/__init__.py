"""Catalytic priors: synthetic-data priors for regression models."""
from .causal import (ArmFits, EffectResult, avg_effect, log_prob_ratio,
                     posterior_effect_distribution)
from .core import (Dataset, DegenerateResponseError, ModelFamily, RankDeficientError,
                   SimpleModelSpec, fit_simple_model, log_likelihood, log_likelihood_grad_hess,
                   read_csv, write_csv)
from .estimators import (CatalyticLinearRegression, CatalyticLogisticRegression,
                         CauchyLogisticRegression)
from .fitting import (LinearPosterior, MapResult, SingularSystemError, fit_cauchy_map,
                      fit_linear_posterior, fit_map, log_posterior, standardize)
from .posterior import (GaussianApprox, SampleMatrix, laplace_approx, posterior_summary,
                        rw_metropolis)
from .synth import (CatalyticPrior, CovariateScheme, SynthConfig, build_catalytic_prior,
                    catalytic_prior, gen_covariates, gen_responses)

__version__ = "0.1.0"

__all__ = [
    "ArmFits", "CatalyticLinearRegression", "CatalyticLogisticRegression", "CatalyticPrior",
    "CauchyLogisticRegression", "CovariateScheme", "Dataset", "DegenerateResponseError",
    "EffectResult", "GaussianApprox", "LinearPosterior", "MapResult", "ModelFamily",
    "RankDeficientError", "SampleMatrix", "SimpleModelSpec", "SingularSystemError", "SynthConfig",
    "avg_effect", "build_catalytic_prior", "catalytic_prior", "fit_cauchy_map",
    "fit_linear_posterior", "fit_map", "fit_simple_model", "gen_covariates", "gen_responses",
    "laplace_approx", "log_likelihood", "log_likelihood_grad_hess", "log_posterior",
    "log_prob_ratio", "posterior_effect_distribution", "posterior_summary", "read_csv",
    "rw_metropolis", "standardize", "write_csv",
]
