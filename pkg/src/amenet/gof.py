"""Descriptive estimators and goodness-of-fit statistics for sociomatrices.

The four fit statistics summarize first- through third-order structure:
standard deviation of the row means, of the column means, the correlation of
the matrix with its transpose (dyadic dependence), and a normalized triple-
product statistic (triadic dependence).  They are compared against their
posterior predictive distributions to check model adequacy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

__all__ = [
    "GOF_NAMES",
    "GofStats",
    "AnovaResult",
    "anova_decompose",
    "effect_covariance",
    "dyadic_residual_stats",
    "gofstats",
    "gof_compare",
]

GOF_NAMES = ("sd_rowmean", "sd_colmean", "dyad_dep", "triad_dep")


class GofStats(NamedTuple):
    sd_rowmean: float
    sd_colmean: float
    dyad_dep: float
    triad_dep: float


def _values(Y) -> np.ndarray:
    vals = np.array(getattr(Y, "values", Y), dtype=float)
    np.fill_diagonal(vals, np.nan)
    return vals


def _sd(x, ddof=1):
    x = x[~np.isnan(x)]
    return float(np.std(x, ddof=ddof)) if x.size > ddof else 0.0


@dataclass(frozen=True)
class AnovaResult:
    muhat: float
    ahat: np.ndarray
    bhat: np.ndarray
    table: dict  # keys row/col/residual -> dict(df, sumsq, meansq, F, p)


def anova_decompose(Y) -> AnovaResult:
    """Row/column ANOVA of a sociomatrix on the vectorized off-diagonal data.

    muhat is the grand mean over defined cells; ahat and bhat are the
    NA-aware row and column means minus muhat.  The table carries sequential
    sums of squares with the row factor entered before the column factor.
    """
    vals = _values(Y)
    obs = ~np.isnan(vals)
    if not obs.any():
        raise ValueError("all cells missing")
    n = vals.shape[0]
    muhat = float(np.nanmean(vals))
    ahat = np.nanmean(vals, axis=1) - muhat
    bhat = np.nanmean(vals, axis=0) - muhat

    ii, jj = np.where(obs)
    y = vals[obs]
    N = y.size

    def rss(X):
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        r = y - X @ coef
        return float(r @ r)

    ones = np.ones((N, 1))
    row_d = np.zeros((N, n - 1))
    row_d[np.arange(N)[ii > 0], ii[ii > 0] - 1] = 1.0
    col_d = np.zeros((N, n - 1))
    col_d[np.arange(N)[jj > 0], jj[jj > 0] - 1] = 1.0

    rss0 = rss(ones)
    rss1 = rss(np.hstack([ones, row_d]))
    rss2 = rss(np.hstack([ones, row_d, col_d]))

    df_row = df_col = n - 1
    df_res = N - 1 - df_row - df_col
    ss_row, ss_col, ss_res = rss0 - rss1, rss1 - rss2, rss2
    mse = ss_res / df_res if df_res > 0 else np.nan

    def entry(ss, df, with_f=True):
        ms = ss / df
        if not with_f or not np.isfinite(mse) or mse == 0:
            return {"df": df, "sumsq": ss, "meansq": ms, "F": np.nan, "p": np.nan}
        F = ms / mse
        return {"df": df, "sumsq": ss, "meansq": ms, "F": F,
                "p": float(stats.f.sf(F, df, df_res))}

    table = {
        "row": entry(ss_row, df_row),
        "col": entry(ss_col, df_col),
        "residual": entry(ss_res, df_res, with_f=False),
    }
    return AnovaResult(muhat=muhat, ahat=ahat, bhat=bhat, table=table)


def effect_covariance(ahat: np.ndarray, bhat: np.ndarray):
    """Sample covariance matrix and correlation of the additive effects."""
    cov = np.cov(np.vstack([ahat, bhat]))
    denom = np.sqrt(cov[0, 0] * cov[1, 1])
    cor = float(cov[0, 1] / denom) if denom > 0 else 0.0
    return cov, cor


def dyadic_residual_stats(Y, muhat: float, ahat: np.ndarray, bhat: np.ndarray):
    """Covariance/correlation of additive-fit residuals with their transpose,
    over cells where both directions are defined."""
    vals = _values(Y)
    R = vals - (muhat + ahat[:, None] + bhat[None, :])
    v1, v2 = R.ravel(), R.T.ravel()
    both = ~np.isnan(v1) & ~np.isnan(v2)
    cov = np.cov(np.vstack([v1[both], v2[both]]))
    denom = np.sqrt(cov[0, 0] * cov[1, 1])
    cor = float(cov[0, 1] / denom) if denom > 0 else 0.0
    return cov, cor


def gofstats(Y) -> np.ndarray:
    """The four goodness-of-fit statistics of a sociomatrix.

    sd_rowmean / sd_colmean: sample sd of the NA-aware row / column means.
    dyad_dep: correlation between the matrix and its transpose over mutually
    defined cells.  triad_dep: trace(EEE) / (trace(DDD) * sd(Y)^3) where E is
    the zero-filled centered matrix and D the indicator of defined cells.
    A constant matrix yields zeros for all four statistics.
    """
    vals = _values(Y)
    if vals.shape[0] < 3:
        raise ValueError("need at least 3 nodes")
    sd_row = _sd(np.nanmean(vals, axis=1))
    sd_col = _sd(np.nanmean(vals, axis=0))

    v1, v2 = vals.ravel(), vals.T.ravel()
    both = ~np.isnan(v1) & ~np.isnan(v2)
    x1, x2 = v1[both], v2[both]
    s1, s2 = np.std(x1), np.std(x2)
    if s1 > 0 and s2 > 0:
        dyad = float(np.corrcoef(x1, x2)[0, 1])
    else:
        dyad = 0.0

    sd_all = _sd(vals.ravel())
    if sd_all > 0:
        E = vals - np.nanmean(vals)
        D = (~np.isnan(E)).astype(float)
        E = np.where(np.isnan(E), 0.0, E)
        triad = float(np.trace(E @ E @ E) / (np.trace(D @ D @ D) * sd_all ** 3))
    else:
        triad = 0.0
    return np.array([sd_row, sd_col, dyad, triad])


def gof_compare(gof_draws: np.ndarray, observed: np.ndarray, bins: int = 25):
    """Compare observed statistics against posterior predictive draws.

    Returns one record per statistic with the observed value, predictive
    mean, the central 95% interval, the smaller one-sided tail probability,
    and histogram bin data for plotting.
    """
    gof_draws = np.asarray(gof_draws, dtype=float)
    observed = np.asarray(observed, dtype=float)
    report = []
    for k, name in enumerate(GOF_NAMES):
        sims = gof_draws[:, k]
        lo, hi = np.percentile(sims, [2.5, 97.5])
        upper = float(np.mean(sims >= observed[k]))
        lower = float(np.mean(sims <= observed[k]))
        counts, edges = np.histogram(sims, bins=bins)
        report.append({
            "statistic": name,
            "observed": float(observed[k]),
            "mean": float(sims.mean()),
            "lo95": float(lo),
            "hi95": float(hi),
            "tailprob": min(upper, lower),
            "covered": bool(lo <= observed[k] <= hi),
            "hist_counts": counts.tolist(),
            "hist_edges": edges.tolist(),
        })
    return report
