"""Per-dyad regression design assembly and covariate construction helpers.

The design tensor holds one slice per regression coefficient, so the linear
predictor for cell (i, j) is the dot product of slice vector (i, j, :) with
the coefficient vector.  Slices are ordered intercept, row-nodal, col-nodal,
dyadic, with name suffixes ".row", ".col", ".dyad" (".node" for symmetric
models, where a nodal covariate enters as x_i + x_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sociomatrix import CovariateSet, LongitudinalData

__all__ = [
    "DesignTensor",
    "build_design",
    "build_design_rep",
    "nodal_product",
    "same_category",
    "lag_dyadic",
    "INTERCEPT_FAMILIES",
]

# families whose latent scale identifies a location, hence get an intercept
INTERCEPT_FAMILIES = frozenset({"nrm", "bin", "frn", "cbin"})


@dataclass(frozen=True)
class DesignTensor:
    """Stacked regression design, shape (T, n, n, p); T=1 for static fits."""

    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 3:
            vals = vals[None, ...]
        if vals.ndim != 4 or vals.shape[1] != vals.shape[2]:
            raise ValueError(f"design must be (T, n, n, p), got {vals.shape}")
        if len(self.names) != vals.shape[3]:
            raise ValueError("one name per design slice required")
        if len(set(self.names)) != len(self.names):
            dupes = sorted({nm for nm in self.names if self.names.count(nm) > 1})
            raise ValueError(f"design name collision: {dupes}")
        vals = np.array(vals)
        idx = np.arange(vals.shape[1])
        vals[:, idx, idx, :] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def p(self) -> int:
        return self.values.shape[3]

    def linear_predictor(self, beta: np.ndarray) -> np.ndarray:
        """(T, n, n) array of per-cell predictor values for coefficients beta."""
        return np.einsum("tijp,p->tij", self.values, beta)


def _symmetrize_dyadic(Xd: np.ndarray) -> np.ndarray:
    return 0.5 * (Xd + np.swapaxes(Xd, 0, 1))


def _suffixed(names, suffix):
    return [nm + suffix for nm in names]


def _assemble(n, family, symmetric, Xd, Xr, Xc, dyad_names, row_names, col_names):
    slices, names = [], []
    if family in INTERCEPT_FAMILIES:
        slices.append(np.ones((n, n)))
        names.append("intercept")
    if symmetric:
        if Xc.shape[1] and not np.array_equal(Xr, Xc):
            raise ValueError("symmetric models use a single set of nodal "
                             "covariates; row and column covariates differ")
        for k in range(Xr.shape[1]):
            slices.append(Xr[:, k][:, None] + Xr[:, k][None, :])
        names += _suffixed(row_names, ".node")
        Xd = _symmetrize_dyadic(Xd)
    else:
        if family == "rrl" and Xr.shape[1]:
            raise ValueError("row covariates are not identifiable under the "
                             "relative rank likelihood; drop them")
        for k in range(Xr.shape[1]):
            slices.append(np.broadcast_to(Xr[:, k][:, None], (n, n)))
        names += _suffixed(row_names, ".row")
        for k in range(Xc.shape[1]):
            slices.append(np.broadcast_to(Xc[:, k][None, :], (n, n)))
        names += _suffixed(col_names, ".col")
    for k in range(Xd.shape[2]):
        slices.append(Xd[:, :, k])
    names += _suffixed(dyad_names, ".dyad")
    X = np.stack(slices, axis=2) if slices else np.zeros((n, n, 0))
    return X, names


def build_design(n: int, covariates: CovariateSet | None, family: str,
                 symmetric: bool = False) -> DesignTensor:
    """Build the static design for n nodes.

    An intercept slice is included for the nrm, bin, frn and cbin families;
    the ordinal and relative-rank likelihoods identify no location, so none
    is added for them.  Symmetric models enter each nodal covariate as
    x_i + x_j and average directed dyadic covariates.
    """
    covs = covariates if covariates is not None else CovariateSet.empty(n)
    covs.check_n(n)
    X, names = _assemble(n, family, symmetric, covs.Xd, covs.Xr, covs.Xc,
                         covs.dyad_names, covs.row_names, covs.col_names)
    return DesignTensor(values=X[None, ...], names=tuple(names))


def build_design_rep(data: LongitudinalData, family: str,
                     symmetric: bool = False) -> DesignTensor:
    """Build the stacked (T, n, n, p) design for longitudinal data."""
    n, T = data.n, data.T
    per_t = []
    names = None
    for t in range(T):
        X, names = _assemble(n, family, symmetric, data.Xd[:, :, :, t],
                             data.Xr[:, :, t], data.Xc[:, :, t],
                             data.dyad_names, data.row_names, data.col_names)
        per_t.append(X)
    return DesignTensor(values=np.stack(per_t, axis=0), names=tuple(names))


def nodal_product(xr: np.ndarray, xc: np.ndarray) -> np.ndarray:
    """Dyadic covariate out[i, j] = xr[i] * xc[j] (homophily product)."""
    xr = np.asarray(xr, dtype=float).ravel()
    xc = np.asarray(xc, dtype=float).ravel()
    if xr.shape != xc.shape:
        raise ValueError(f"length mismatch: {xr.shape[0]} vs {xc.shape[0]}")
    return np.outer(xr, xc)


def same_category(x) -> np.ndarray:
    """Binary dyadic covariate out[i, j] = 1 iff x[i] == x[j]."""
    x = np.asarray(x)
    return (x[:, None] == x[None, :]).astype(float)


def lag_dyadic(data: LongitudinalData, transpose: bool = False) -> np.ndarray:
    """Lagged outcome values as an (n, n, T-1) dyadic covariate.

    Slice t holds the outcome at time t-1 (its transpose when
    transpose=True, the lagged reciprocal value).  Missing lag cells stay
    NaN; the engine treats design rows containing NaN as missing outcomes.
    """
    if data.T < 2:
        raise ValueError("need at least two time points to lag")
    mats = []
    for t in range(data.T - 1):
        M = np.array(data.Y[t].values)
        np.fill_diagonal(M, 0.0)
        mats.append(M.T if transpose else M)
    return np.stack(mats, axis=2)
