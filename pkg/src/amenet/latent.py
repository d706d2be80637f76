"""Latent-scale samplers for the non-Gaussian likelihoods.

Each observed family constrains a latent Gaussian sociomatrix Z:

  bin   y = 1(z > 0)
  ord   y = g(z) for an unknown non-decreasing g; only the matrix-wide
        ordering constraints it implies on Z are used (rank likelihood)
  rrl   as ord, but with ordering constraints within each row only
  frn   ranked nominations: ranked cells have z > 0 and follow the
        within-row rank order; unranked cells have z <= 0 unless the row
        spent its whole nomination budget, in which case they are only
        bounded above by the row's smallest ranked z (censoring)
  cbin  binary nominations with the frn budget censoring but no rank order

Updates redraw cells in blocks chosen so that cells within a block are
mutually unconstrained and never dyad partners of each other; every block
draw then respects bounds computed from the current state, which keeps all
constraints satisfied after every sweep.  Tied observed values impose no
constraint on each other.  Missing cells are drawn from their unconstrained
conditionals, which is the imputation step for ignorable designs.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "rtnorm",
    "impute_missing",
    "update_z_bin",
    "update_z_ord",
    "update_z_rrl",
    "update_z_frn",
    "update_z_cbin",
    "update_z_symmetric",
    "audit_constraints",
    "init_z",
]

_TINY = np.finfo(float).tiny


def rtnorm(rng, mean, sd, lower, upper):
    """Draw from a normal distribution truncated to (lower, upper).

    Vectorized over broadcastable arguments; either bound may be infinite.
    Uses the inverse CDF on whichever tail has floating-point resolution, so
    draws stay finite and inside the interval for bounds many standard
    deviations from the mean.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), np.broadcast_shapes(
        mean.shape, sd.shape, np.shape(lower), np.shape(upper))).copy()
    shape = lo.shape
    hi = np.broadcast_to(np.asarray(upper, dtype=float), shape).copy()
    mean = np.broadcast_to(mean, shape)
    sd = np.broadcast_to(sd, shape)
    if np.any(lo >= hi):
        raise ValueError("empty truncation interval")
    if np.any(sd <= 0):
        raise ValueError("sd must be positive")

    a = (lo - mean) / sd
    b = (hi - mean) / sd
    u = rng.uniform(size=shape)

    # mirror intervals that sit in the right tail so ndtr keeps resolution
    flip = a > 0
    a_w = np.where(flip, -b, a)
    b_w = np.where(flip, -a, b)
    pa = ndtr(a_w)
    pb = ndtr(b_w)
    q = np.clip(pa + u * (pb - pa), _TINY, 1.0 - 1e-16)
    z = ndtri(q)
    z = np.where(flip, -z, z)
    out = mean + sd * z
    # keep draws strictly inside finite bounds (ndtri can round onto them)
    finite_lo = np.isfinite(lo)
    finite_hi = np.isfinite(hi)
    out = np.where(finite_lo, np.maximum(out, np.nextafter(lo, np.inf)), out)
    out = np.where(finite_hi, np.minimum(out, np.nextafter(hi, -np.inf)), out)
    return out if shape else float(out)


def _triangles(n):
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    return upper, upper.T


def _draw_block(rng, Z, M, mask, rho, s2e, lo, hi):
    """Redraw the cells in mask given their dyad partners.

    lo/hi are scalars or per-row vectors indexed by the cell's row.
    """
    ii, jj = np.nonzero(mask)
    if ii.size == 0:
        return
    cm = M[ii, jj] + rho * (Z[jj, ii] - M[jj, ii])
    sd = np.sqrt(s2e * (1.0 - rho ** 2))
    lo_c = lo[ii] if isinstance(lo, np.ndarray) else lo
    hi_c = hi[ii] if isinstance(hi, np.ndarray) else hi
    Z[ii, jj] = rtnorm(rng, cm, sd, lo_c, hi_c)


def _offdiag_missing(Y):
    miss = np.isnan(Y)
    np.fill_diagonal(miss, False)
    return miss


def impute_missing(rng, Z, M, rho, mask, s2e=1.0):
    """Redraw masked cells from their unconstrained partner conditionals."""
    upper, lower = _triangles(Z.shape[0])
    for tri in (upper, lower):
        _draw_block(rng, Z, M, mask & tri, rho, s2e, -np.inf, np.inf)
    return Z


def update_z_bin(rng, Z, M, Y, rho, s2e=1.0):
    """Probit update: z > 0 where y = 1, z <= 0 where y = 0."""
    obs = ~_offdiag_missing(Y) & ~np.eye(Y.shape[0], dtype=bool)
    vals = Y[obs]
    if not np.all((vals == 0) | (vals == 1)):
        raise ValueError("binary family requires 0/1 outcomes")
    upper, lower = _triangles(Z.shape[0])
    for tri in (upper, lower):
        _draw_block(rng, Z, M, (Y == 1) & tri, rho, s2e, 0.0, np.inf)
        _draw_block(rng, Z, M, (Y == 0) & tri, rho, s2e, -np.inf, 0.0)
    impute_missing(rng, Z, M, rho, _offdiag_missing(Y), s2e)
    return Z


def _level_codes(Y):
    """Matrix-wide dense level codes of the observed cells (-1 elsewhere)."""
    n = Y.shape[0]
    code = np.full((n, n), -1)
    obs = ~np.isnan(Y)
    np.fill_diagonal(obs, False)
    if obs.any():
        levels, inv = np.unique(Y[obs], return_inverse=True)
        code[obs] = inv
        return code, len(levels)
    return code, 0


def _row_codes(Y, positive_only=False):
    """Per-row dense level codes (-1 for missing/excluded cells)."""
    n = Y.shape[0]
    code = np.full((n, n), -1)
    kmax = 0
    for i in range(n):
        sel = ~np.isnan(Y[i])
        sel[i] = False
        if positive_only:
            sel &= Y[i] > 0
        if sel.any():
            levels, inv = np.unique(Y[i][sel], return_inverse=True)
            code[i, sel] = inv
            kmax = max(kmax, len(levels))
    return code, kmax


def _group_extremes(Z, code, n_groups, by_row=False, n=None):
    """Current max/min of Z within each level group (matrix-wide or per row)."""
    sel = code >= 0
    ii, jj = np.nonzero(sel)
    z = Z[ii, jj]
    if by_row:
        gmax = np.full((n, n_groups), -np.inf)
        gmin = np.full((n, n_groups), np.inf)
        np.maximum.at(gmax, (ii, code[ii, jj]), z)
        np.minimum.at(gmin, (ii, code[ii, jj]), z)
    else:
        gmax = np.full(n_groups, -np.inf)
        gmin = np.full(n_groups, np.inf)
        np.maximum.at(gmax, code[ii, jj], z)
        np.minimum.at(gmin, code[ii, jj], z)
    return gmax, gmin


def _suffix_min(gmin):
    """suffix[k] = min over groups >= k, padded with +inf past the end."""
    rev = np.minimum.accumulate(gmin[..., ::-1], axis=-1)[..., ::-1]
    pad = np.full(gmin.shape[:-1] + (1,), np.inf)
    return np.concatenate([rev, pad], axis=-1)


def update_z_ord(rng, Z, M, Y, rho, s2e=1.0):
    """Rank-likelihood update with matrix-wide ordering constraints."""
    n = Z.shape[0]
    code, n_levels = _level_codes(Y)
    upper, lower = _triangles(n)
    if n_levels:
        gmax, gmin = _group_extremes(Z, code, n_levels)
        suffix = _suffix_min(gmin)
        run_max = -np.inf
        for k in range(n_levels):
            sel = code == k
            for tri in (upper, lower):
                _draw_block(rng, Z, M, sel & tri, rho, s2e, run_max, suffix[k + 1])
            zk = Z[sel]
            run_max = max(run_max, zk.max())
    impute_missing(rng, Z, M, rho, _offdiag_missing(Y), s2e)
    return Z


def update_z_rrl(rng, Z, M, Y, rho, s2e=1.0):
    """Rank-likelihood update constraining only within-row orderings."""
    n = Z.shape[0]
    code, kmax = _row_codes(Y)
    upper, lower = _triangles(n)
    if kmax:
        gmax, gmin = _group_extremes(Z, code, kmax, by_row=True, n=n)
        suffix = _suffix_min(gmin)
        run_max = np.full(n, -np.inf)
        for k in range(kmax):
            sel = code == k
            for tri in (upper, lower):
                _draw_block(rng, Z, M, sel & tri, rho, s2e, run_max, suffix[:, k + 1])
            tmax = np.full(n, -np.inf)
            ii, jj = np.nonzero(sel)
            np.maximum.at(tmax, ii, Z[ii, jj])
            run_max = np.maximum(run_max, tmax)
    impute_missing(rng, Z, M, rho, _offdiag_missing(Y), s2e)
    return Z


def _check_budget(Y, odmax, ranked):
    d = ranked.sum(axis=1).astype(float)
    odmax = np.broadcast_to(np.asarray(odmax, dtype=float), (Y.shape[0],))
    if np.any(d > odmax):
        rows = np.nonzero(d > odmax)[0]
        raise ValueError(f"rows {rows.tolist()} exceed their nomination cap")
    return d, odmax, d >= odmax


def update_z_frn(rng, Z, M, Y, rho, odmax, s2e=1.0):
    """Fixed-rank-nomination update: sign, rank order and budget censoring."""
    n = Z.shape[0]
    obs = ~np.isnan(Y)
    np.fill_diagonal(obs, False)
    ranked = obs & (Y > 0)
    unranked = obs & (Y == 0)
    d, odmax, censored = _check_budget(Y, odmax, ranked)
    upper, lower = _triangles(n)

    code, kmax = _row_codes(Y, positive_only=True)
    unr_max = np.full(n, -np.inf)
    ii, jj = np.nonzero(unranked)
    np.maximum.at(unr_max, ii, Z[ii, jj])

    if kmax:
        gmax, gmin = _group_extremes(Z, code, kmax, by_row=True, n=n)
        suffix = _suffix_min(gmin)
        run_max = np.maximum(0.0, unr_max)
        for k in range(kmax):
            sel = code == k
            for tri in (upper, lower):
                _draw_block(rng, Z, M, sel & tri, rho, s2e, run_max, suffix[:, k + 1])
            tmax = np.full(n, -np.inf)
            si, sj = np.nonzero(sel)
            np.maximum.at(tmax, si, Z[si, sj])
            run_max = np.maximum(run_max, tmax)

    ranked_min = np.full(n, np.inf)
    ri, rj = np.nonzero(ranked)
    np.minimum.at(ranked_min, ri, Z[ri, rj])
    ub = np.where(censored, ranked_min, np.minimum(ranked_min, 0.0))
    for tri in (upper, lower):
        _draw_block(rng, Z, M, unranked & tri, rho, s2e, -np.inf, ub)

    impute_missing(rng, Z, M, rho, _offdiag_missing(Y), s2e)
    return Z


def update_z_cbin(rng, Z, M, Y, rho, odmax, s2e=1.0):
    """Censored-binary update: frn without the rank-order constraint."""
    n = Z.shape[0]
    obs = ~np.isnan(Y)
    np.fill_diagonal(obs, False)
    vals = Y[obs]
    if not np.all((vals == 0) | (vals == 1)):
        raise ValueError("censored-binary family requires 0/1 outcomes")
    ones = obs & (Y == 1)
    zeros = obs & (Y == 0)
    d, odmax, censored = _check_budget(Y, odmax, ones)
    upper, lower = _triangles(n)

    zero_max = np.full(n, -np.inf)
    zi, zj = np.nonzero(zeros)
    np.maximum.at(zero_max, zi, Z[zi, zj])
    lb_ones = np.maximum(0.0, zero_max)
    for tri in (upper, lower):
        _draw_block(rng, Z, M, ones & tri, rho, s2e, lb_ones, np.inf)

    one_min = np.full(n, np.inf)
    oi, oj = np.nonzero(ones)
    np.minimum.at(one_min, oi, Z[oi, oj])
    ub_zeros = np.where(censored, one_min, np.minimum(one_min, 0.0))
    for tri in (upper, lower):
        _draw_block(rng, Z, M, zeros & tri, rho, s2e, -np.inf, ub_zeros)

    impute_missing(rng, Z, M, rho, _offdiag_missing(Y), s2e)
    return Z


def update_z_symmetric(rng, Z, M, Y, family, s2e=1.0):
    """Latent update for symmetric models: one value per dyad, mirrored.

    Supported families: nrm (imputation only), bin, ord.
    """
    n = Z.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    yu = Y[iu, ju]
    mu = M[iu, ju]
    zu = Z[iu, ju]
    sd = np.sqrt(s2e)
    if family == "bin":
        for val, lo, hi in ((1.0, 0.0, np.inf), (0.0, -np.inf, 0.0)):
            sel = yu == val
            if sel.any():
                zu[sel] = rtnorm(rng, mu[sel], sd, lo, hi)
    elif family == "ord":
        obs_u = ~np.isnan(yu)
        if obs_u.any():
            levels, inv = np.unique(yu[obs_u], return_inverse=True)
            code = np.full(yu.shape, -1)
            code[obs_u] = inv
            gmin = np.full(len(levels), np.inf)
            np.minimum.at(gmin, code[obs_u], zu[obs_u])
            suffix = _suffix_min(gmin)
            run_max = -np.inf
            for k in range(len(levels)):
                sel = code == k
                zu[sel] = rtnorm(rng, mu[sel], sd, run_max, suffix[k + 1])
                run_max = max(run_max, zu[sel].max())
    elif family != "nrm":
        raise ValueError(f"symmetric models do not support family {family!r}")
    miss = np.isnan(yu)
    if miss.any():
        zu[miss] = mu[miss] + sd * rng.standard_normal(miss.sum())
    Z[iu, ju] = zu
    Z[ju, iu] = zu
    return Z


def audit_constraints(Z, Y, family, odmax=None) -> int:
    """Count violated latent constraints (0 for a valid state)."""
    n = Z.shape[0]
    obs = ~np.isnan(Y)
    np.fill_diagonal(obs, False)
    bad = 0
    if family == "bin":
        bad += int(((Y == 1) & obs & (Z <= 0)).sum())
        bad += int(((Y == 0) & obs & (Z > 0)).sum())
    elif family == "ord":
        code, n_levels = _level_codes(Y)
        if n_levels > 1:
            gmax, gmin = _group_extremes(Z, code, n_levels)
            run = np.maximum.accumulate(gmax)
            bad += int((run[:-1] >= gmin[1:]).sum())
    elif family == "rrl":
        code, kmax = _row_codes(Y)
        if kmax > 1:
            gmax, gmin = _group_extremes(Z, code, kmax, by_row=True, n=n)
            run = np.maximum.accumulate(gmax, axis=1)
            bad += int((run[:, :-1] >= gmin[:, 1:]).sum())
    elif family in ("frn", "cbin"):
        pos = obs & (Y > 0)
        zer = obs & (Y == 0)
        d = pos.sum(axis=1).astype(float)
        cap = np.broadcast_to(np.asarray(odmax, dtype=float), (n,))
        censored = d >= cap
        bad += int((pos & (Z <= 0)).sum())
        bad += int((zer & ~censored[:, None] & (Z > 0)).sum())
        pos_min = np.where(pos, Z, np.inf).min(axis=1)
        zer_max = np.where(zer, Z, -np.inf).max(axis=1)
        bad += int((censored & (zer_max >= pos_min)).sum())
        if family == "frn":
            code, kmax = _row_codes(Y, positive_only=True)
            if kmax > 1:
                gmax, gmin = _group_extremes(Z, code, kmax, by_row=True, n=n)
                run = np.maximum.accumulate(gmax, axis=1)
                bad += int((run[:, :-1] >= gmin[:, 1:]).sum())
    return bad


def _normal_scores(ranks, count):
    return ndtri((ranks - 0.375) / (count + 0.25))


def init_z(Y, family, odmax=None) -> np.ndarray:
    """Constraint-respecting starting latent matrix for one outcome slice."""
    n = Y.shape[0]
    obs = ~np.isnan(Y)
    np.fill_diagonal(obs, False)
    Z = np.zeros((n, n))
    if family == "nrm":
        fill = np.nanmean(Y[obs]) if obs.any() else 0.0
        Z[:] = fill
        Z[obs] = Y[obs]
    elif family in ("bin", "cbin"):
        Z[obs & (Y == 1)] = 1.0
        Z[obs & (Y == 0)] = -0.5
    elif family == "frn":
        Z[obs] = Y[obs]
        Z[obs & (Y == 0)] = -0.5
    elif family == "ord":
        if obs.any():
            levels, inv = np.unique(Y[obs], return_inverse=True)
            Z[obs] = _normal_scores(inv + 1.0, len(levels) + 1.0)
    elif family == "rrl":
        for i in range(n):
            sel = obs[i]
            if sel.any():
                levels, inv = np.unique(Y[i][sel], return_inverse=True)
                Z[i, sel] = _normal_scores(inv + 1.0, len(levels) + 1.0)
    else:
        raise ValueError(f"unknown family {family!r}")
    np.fill_diagonal(Z, 0.0)
    return Z
