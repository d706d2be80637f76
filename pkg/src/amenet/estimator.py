"""Scikit-learn style estimator wrapping the sampler.

The estimator holds the model configuration as constructor parameters (so
get_params/set_params/clone compose with the wider ecosystem), fits from a
sociomatrix plus optional covariate arrays, and exposes the posterior
summaries as trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .engine import ModelSpec, Priors, fit_ame, fit_ame_rep
from .sociomatrix import CovariateSet, LongitudinalData

__all__ = ["AmeEstimator"]


class AmeEstimator(BaseEstimator):
    """Additive and multiplicative effects network model.

    Parameters mirror the sampler controls: likelihood family, latent factor
    rank, symmetric mode, which variance components to include, the
    nomination cap for censored families, and the MCMC schedule.

    After fit: beta_, beta_names_, vc_, vc_names_, apm_, bpm_, uvpm_, ypm_,
    u_, v_, l_, gof_ and result_ (the full FitResult).
    """

    def __init__(self, family="nrm", rank=0, symmetric=False, rvar=True,
                 cvar=True, dcor=True, odmax=None, burn=None, nscan=None,
                 odens=None, seed=1, chains=1, beta_prior_var=None):
        self.family = family
        self.rank = rank
        self.symmetric = symmetric
        self.rvar = rvar
        self.cvar = cvar
        self.dcor = dcor
        self.odmax = odmax
        self.burn = burn
        self.nscan = nscan
        self.odens = odens
        self.seed = seed
        self.chains = chains
        self.beta_prior_var = beta_prior_var

    def _spec(self) -> ModelSpec:
        return ModelSpec(family=self.family, rank=self.rank,
                         symmetric=self.symmetric, rvar=self.rvar,
                         cvar=self.cvar, dcor=self.dcor, odmax=self.odmax,
                         burn=self.burn, nscan=self.nscan, odens=self.odens,
                         seed=self.seed,
                         priors=Priors(beta_var=self.beta_prior_var))

    def fit(self, Y, Xd=None, Xr=None, Xc=None, dyad_names=(), row_names=(),
            col_names=()):
        """Fit the model.

        Y is a Sociomatrix, a square array, or LongitudinalData (in which
        case the covariate arguments are ignored and the slices' own
        covariates are used).
        """
        if isinstance(Y, LongitudinalData):
            result = fit_ame_rep(Y, self._spec(), chains=self.chains)
        else:
            covs = None
            if Xd is not None or Xr is not None or Xc is not None:
                n = Y.n if hasattr(Y, "n") else np.asarray(Y).shape[0]
                covs = CovariateSet(
                    Xd=Xd if Xd is not None else np.zeros((n, n, 0)),
                    Xr=Xr if Xr is not None else np.zeros((n, 0)),
                    Xc=Xc if Xc is not None else np.zeros((n, 0)),
                    dyad_names=dyad_names, row_names=row_names,
                    col_names=col_names)
            result = fit_ame(Y, covs, self._spec(), chains=self.chains)
        self.result_ = result
        self.beta_ = result.BETA.mean(axis=0)
        self.beta_names_ = result.beta_names
        self.vc_ = result.VC.mean(axis=0)
        self.vc_names_ = result.vc_names
        self.apm_ = result.APM
        self.bpm_ = result.BPM
        self.uvpm_ = result.UVPM
        self.ypm_ = result.YPM
        self.u_, self.v_, self.l_ = result.U, result.V, result.L
        self.gof_ = result.GOF
        return self

    def predict(self):
        """Posterior predictive mean for every off-diagonal cell (the
        observable scale for Gaussian and binary families, the latent scale
        for rank-based ones)."""
        self._check_fitted()
        return self.ypm_

    def summary(self) -> str:
        self._check_fitted()
        return self.result_.summary()

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise RuntimeError("estimator is not fitted; call fit first")
