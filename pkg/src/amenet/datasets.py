"""Access to the bundled example datasets.

The raw data live as labeled CSV files under the repository's data/
directory (see data/manifest.json for provenance).  The loaders here apply
the standard analysis transformations (log scales, centering, interaction
covariates) so each function returns objects ready to fit.

The data directory is resolved from the AME_DATA_DIR environment variable,
falling back to a data/ directory next to the installed package or above
the current working directory.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .sociomatrix import (CovariateSet, LongitudinalData, Sociomatrix,
                          load_nodal_table, load_sociomatrix)

__all__ = [
    "data_dir",
    "load_manifest",
    "trade30",
    "lazega_friendship",
    "sheep_dominance",
    "sampson_like",
    "dutchcollege_static",
    "dutchcollege_longitudinal",
    "coldwar_symmetric",
]


def data_dir() -> Path:
    env = os.environ.get("AME_DATA_DIR")
    candidates = []
    if env:
        candidates.append(Path(env))
    here = Path(__file__).resolve()
    candidates.append(here.parents[2] / "data")          # src layout checkout
    cwd = Path.cwd()
    candidates.extend([cwd / "data"] + [p / "data" for p in cwd.parents])
    for cand in candidates:
        if (cand / "manifest.json").exists():
            return cand
    raise FileNotFoundError(
        "bundled data directory not found; set AME_DATA_DIR to a directory "
        "containing manifest.json")


def load_manifest() -> dict:
    with open(data_dir() / "manifest.json") as f:
        return json.load(f)


def _square(rel: str) -> Sociomatrix:
    return load_sociomatrix(data_dir() / rel)


def _table(rel: str):
    return load_nodal_table(data_dir() / rel)


def _log_offdiag(M: np.ndarray) -> np.ndarray:
    out = np.array(M, dtype=float)
    off = ~np.eye(out.shape[0], dtype=bool)
    out[off] = np.log(out[off])
    np.fill_diagonal(out, 0.0)
    return out


def trade30() -> tuple[Sociomatrix, CovariateSet]:
    """Trade flows between the 30 highest-GDP countries.

    Outcome is log(exports + 1).  Nodal covariates: log population, log GDP,
    polity.  Dyadic covariates: conflicts, distance, log shared IGO
    memberships, polity interaction.
    """
    labels, node_names, nodevars = _table("ir90s/nodevars.csv")
    gdp = nodevars[:, node_names.index("gdp")]
    cutoff = np.sort(gdp)[::-1][29]
    keep = np.where(gdp >= cutoff)[0]
    labels = [labels[i] for i in keep]

    exports = _square("ir90s/dyad_exports.csv").values[np.ix_(keep, keep)]
    Y = Sociomatrix(values=np.log(exports + 1), labels=tuple(labels))

    Xn = nodevars[keep].copy()
    Xn[:, :2] = np.log(Xn[:, :2])           # pop and gdp on log scale

    dyad_names = ["conflicts", "distance", "shared_igos", "polity_int"]
    slices = []
    for nm in dyad_names:
        M = _square(f"ir90s/dyad_{nm}.csv").values[np.ix_(keep, keep)].copy()
        np.fill_diagonal(M, 0.0)
        slices.append(M)
    # shared IGO counts enter on the log scale in the published analysis
    slices[2] = _log_offdiag(slices[2])
    Xd = np.stack(slices, axis=2)

    covs = CovariateSet(Xd=Xd, Xr=Xn, Xc=Xn,
                        dyad_names=tuple(dyad_names),
                        row_names=tuple(node_names), col_names=tuple(node_names))
    return Y, covs


def lazega_friendship() -> tuple[Sociomatrix, CovariateSet]:
    """Friendship network between 71 lawyers, with advice/cowork dyadic
    covariates and five nodal covariates."""
    Y = _square("lazegalaw/y_friendship.csv")
    advice = _square("lazegalaw/y_advice.csv").values.copy()
    cowork = _square("lazegalaw/y_cowork.csv").values.copy()
    for M in (advice, cowork):
        np.fill_diagonal(M, 0.0)
    labels, names, X = _table("lazegalaw/nodevars.csv")
    keep = ["status", "female", "seniority", "age", "practice"]
    cols = [names.index(k) for k in keep]
    Xn = X[:, cols]
    covs = CovariateSet(Xd=np.stack([advice, cowork], axis=2),
                        Xr=Xn, Xc=Xn,
                        dyad_names=("advice", "cowork"),
                        row_names=tuple(keep), col_names=tuple(keep))
    return Y, covs


def sheep_dominance() -> tuple[Sociomatrix, CovariateSet]:
    """Dominance encounter counts between 28 ewes with age covariates.

    Nodal covariates are centered age and its square; the single dyadic
    covariate is the product of centered ages (unnamed, as published).
    """
    Y = _square("sheep/dom.csv")
    _, _, tab = _table("sheep/nodevars.csv")
    x = tab[:, 0] - tab[:, 0].mean()
    Xd = np.outer(x, x)
    np.fill_diagonal(Xd, 0.0)
    Xn = np.column_stack([x, x ** 2])
    covs = CovariateSet(Xd=Xd[:, :, None], Xr=Xn, Xc=Xn,
                        dyad_names=("",),
                        row_names=("age", "age2"), col_names=("age", "age2"))
    return Y, covs


def sampson_like() -> tuple[Sociomatrix, np.ndarray]:
    """Monastery liking ranks (top three, coded 3..1) and the odmax vector.

    Two respondents ignored the instructions and ranked four others; their
    nomination cap is raised to four.
    """
    Y = _square("sampsonmonks/y_like.csv")
    outdeg = np.nansum(Y.values > 0, axis=1)
    odmax = np.full(Y.n, 3.0)
    odmax[outdeg > 3] = 4.0
    return Y, odmax


def dutchcollege_static() -> tuple[Sociomatrix, CovariateSet]:
    """Positive-relationship indicator at the last wave, with a male-sex
    nodal covariate and a same-sex dyadic indicator."""
    raw = _square("dutchcollege/y_t7.csv")
    vals = np.where(np.isnan(raw.values), np.nan, (raw.values > 1).astype(float))
    Y = Sociomatrix(values=vals, labels=raw.labels)
    labels, names, X = _table("dutchcollege/nodevars.csv")
    male = X[:, names.index("male")]
    same_sex = (male[:, None] == male[None, :]).astype(float)
    np.fill_diagonal(same_sex, 0.0)
    covs = CovariateSet(Xd=same_sex[:, :, None], Xr=male[:, None], Xc=male[:, None],
                        dyad_names=("",), row_names=("",), col_names=("",))
    return Y, covs


def dutchcollege_longitudinal(interval_interactions: bool = False) -> LongitudinalData:
    """Friendliness indicators for waves 2..7 with autoregressive covariates.

    Dyadic covariates per wave: the lagged indicator, the lagged reciprocal
    indicator, both-male, both-smoker and same-program indicators.  Nodal
    covariates: male and smoker.  With interval_interactions=True every
    covariate is duplicated interacted with an indicator of the last three
    waves (the waves measured at a longer interval), suffix ".w".
    """
    waves = [_square(f"dutchcollege/y_t{t}.csv").values for t in range(1, 8)]
    labels = _square("dutchcollege/y_t1.csv").labels
    ind = [np.where(np.isnan(W), np.nan, (W >= 2).astype(float)) for W in waves]
    Y = tuple(Sociomatrix(values=ind[t], labels=labels) for t in range(1, 7))

    _, names, X = _table("dutchcollege/nodevars.csv")
    male, smoker = X[:, names.index("male")], X[:, names.index("smoker")]
    program = X[:, names.index("program")]
    n, T = len(male), 6

    lag = np.stack([np.nan_to_num(ind[t], nan=0.0) for t in range(0, 6)], axis=2)
    Xd = np.zeros((n, n, 5, T))
    for t in range(T):
        Xd[:, :, 0, t] = lag[:, :, t]
        Xd[:, :, 1, t] = lag[:, :, t].T
        Xd[:, :, 2, t] = np.outer(male, male)
        Xd[:, :, 3, t] = np.outer(smoker, smoker)
        Xd[:, :, 4, t] = (program[:, None] == program[None, :]).astype(float)
    dyad_names = ["Ylag", "tYlag", "bothmale", "bothsmoke", "sameprog"]

    Xn = np.zeros((n, 2, T))
    Xn[:, 0, :] = male[:, None]
    Xn[:, 1, :] = smoker[:, None]
    node_names = ["male", "smoker"]

    if interval_interactions:
        w = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        Xd = np.concatenate([Xd, Xd * w[None, None, None, :]], axis=2)
        dyad_names = dyad_names + [nm + ".w" for nm in dyad_names]
        Xn = np.concatenate([Xn, Xn * w[None, None, :]], axis=1)
        node_names = node_names + [nm + ".w" for nm in node_names]

    return LongitudinalData(Y=Y, Xd=Xd, Xr=Xn, Xc=Xn,
                            dyad_names=tuple(dyad_names),
                            row_names=tuple(node_names),
                            col_names=tuple(node_names))


def coldwar_symmetric() -> tuple[Sociomatrix, CovariateSet]:
    """Sign of time-averaged cooperation/conflict counts, 66 countries.

    Nodal covariates: centered mean log GDP and the sign of mean polity.
    Dyadic covariates: the two nodal interactions plus log distance.
    """
    man = load_manifest()
    years = man["datasets"]["coldwar"]["years"]
    cc = np.stack([_square(f"coldwar/cc_{yr}.csv").values for yr in years], axis=2)
    Y = Sociomatrix(values=np.sign(np.mean(cc, axis=2)),
                    labels=_square(f"coldwar/cc_{years[0]}.csv").labels)

    labels, _, gdp = _table("coldwar/gdp.csv")
    _, _, polity = _table("coldwar/polity.csv")
    lgdp = np.log(gdp).mean(axis=1)
    lgdp = lgdp - lgdp.mean()
    pol = np.sign(polity.mean(axis=1))
    Xn = np.column_stack([lgdp, pol])

    dist = _square("coldwar/distance.csv").values
    Xd = np.stack([np.outer(lgdp, lgdp), np.outer(pol, pol), _log_offdiag(dist)],
                  axis=2)
    idx = np.arange(len(lgdp))
    Xd[idx, idx, :] = 0.0
    covs = CovariateSet(Xd=Xd, Xr=Xn, Xc=Xn,
                        dyad_names=("igdp", "ipol", "ldist"),
                        row_names=("lgdp", "polity"), col_names=("lgdp", "polity"))
    return Y, covs
