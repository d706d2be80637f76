"""Bayesian additive and multiplicative effects models for dyadic data.

The package fits social-relations and latent-factor regression models to
directed, undirected, binary, ordinal, censored and longitudinal network
outcomes by Gibbs sampling, with posterior predictive goodness-of-fit
checking and missing-cell prediction.
"""

from .design import (DesignTensor, build_design, build_design_rep, lag_dyadic,
                     nodal_product, same_category)
from .engine import (FitResult, ModelSpec, ParamState, Priors, fit_ame,
                     fit_ame_rep, fit_symmetric, simulate_Y, summarize,
                     summary_table)
from .estimator import AmeEstimator
from .gof import (GofStats, anova_decompose, dyadic_residual_stats,
                  effect_covariance, gof_compare, gofstats)
from .latent import rtnorm
from .sociomatrix import (CovariateSet, LongitudinalData, Sociomatrix,
                          assemble_longitudinal, egocentric_sample,
                          load_covariates, load_sociomatrix, write_sociomatrix)
from .srm import AdditiveEffects, SrmParams, srm_covariances

__version__ = "0.1.0"

__all__ = [
    "AdditiveEffects",
    "AmeEstimator",
    "CovariateSet",
    "DesignTensor",
    "FitResult",
    "GofStats",
    "LongitudinalData",
    "ModelSpec",
    "ParamState",
    "Priors",
    "Sociomatrix",
    "SrmParams",
    "anova_decompose",
    "assemble_longitudinal",
    "build_design",
    "build_design_rep",
    "dyadic_residual_stats",
    "effect_covariance",
    "egocentric_sample",
    "fit_ame",
    "fit_ame_rep",
    "fit_symmetric",
    "gof_compare",
    "gofstats",
    "lag_dyadic",
    "load_covariates",
    "load_sociomatrix",
    "nodal_product",
    "rtnorm",
    "same_category",
    "simulate_Y",
    "srm_covariances",
    "summarize",
    "summary_table",
    "write_sociomatrix",
]
