"""Rank-R multiplicative latent effects.

Asymmetric models use sender factors U and receiver factors V, contributing
u_i . v_j to the mean of cell (i, j).  Symmetric models use a single factor
matrix with a diagonal weight vector, contributing u_i . (lam * u_j).  Rows
are updated one at a time from their exact Gaussian full conditionals; the
dyadic residual correlation enters through conditioning on the partner
cell's residual.  Individual factor draws are rotation-non-identified; the
quantity of record is the posterior mean of the multiplicative mean matrix.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "multiplicative_mean",
    "uv_row_conditional",
    "draw_factors_uv",
    "ul_row_conditional",
    "draw_factors_ul",
    "draw_lambda",
    "draw_psi2",
    "init_factors",
    "factor_point_estimates",
]


def multiplicative_mean(U: np.ndarray, V: np.ndarray | None = None,
                        lam: np.ndarray | None = None) -> np.ndarray:
    """The n x n multiplicative mean: U V' or U diag(lam) U' (symmetric)."""
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    if U.shape[1] == 0:
        return np.zeros((n, n))
    if lam is not None:
        return (U * np.asarray(lam, dtype=float)) @ U.T
    if V is None:
        raise ValueError("need either receiver factors or symmetric weights")
    return U @ np.asarray(V, dtype=float).T


def uv_row_conditional(i: int, S: np.ndarray, U: np.ndarray, V: np.ndarray,
                       rho: float, s2e: float, psi2: float, update_u: bool):
    """Gaussian full-conditional (precision, linear term) of one factor row.

    S is the (T, n, n) residual stack (latent minus regression and additive
    parts, diagonal zeroed).  A sender row regresses the cells of row i on
    the receiver factors after subtracting the conditioning term
    rho * (partner-cell residual); receiver rows mirror this on column i.
    """
    T = S.shape[0]
    c = s2e * (1.0 - rho ** 2)
    if update_u:
        partner = S[:, :, i] - (U @ V[i])[None, :]   # residuals of (j, i) cells
        targ = S[:, i, :] - rho * partner
        design = V
    else:
        partner = S[:, i, :] - (V @ U[i])[None, :]   # residuals of (i, j) cells
        targ = S[:, :, i] - rho * partner
        design = U
    targ = np.array(targ)
    targ[:, i] = 0.0
    gram = design.T @ design - np.outer(design[i], design[i])
    prec = T * gram / c + np.eye(design.shape[1]) / psi2
    lin = design.T @ targ.sum(axis=0) / c
    return prec, lin


def _draw_row(rng, prec, lin):
    L = np.linalg.cholesky(prec)
    mean = np.linalg.solve(L.T, np.linalg.solve(L, lin))
    return mean + np.linalg.solve(L.T, rng.standard_normal(len(lin)))


def draw_factors_uv(rng, S: np.ndarray, U: np.ndarray, V: np.ndarray,
                    rho: float, s2e: float, psi2: float):
    """Sequential Gibbs sweep over all sender rows, then all receiver rows."""
    n, rank = U.shape
    if rank == 0:
        return U, V
    if rank > n:
        raise ValueError("factor rank exceeds the number of nodes")
    U, V = np.array(U), np.array(V)
    for i in range(n):
        prec, lin = uv_row_conditional(i, S, U, V, rho, s2e, psi2, update_u=True)
        U[i] = _draw_row(rng, prec, lin)
    for j in range(n):
        prec, lin = uv_row_conditional(j, S, U, V, rho, s2e, psi2, update_u=False)
        V[j] = _draw_row(rng, prec, lin)
    return U, V


def ul_row_conditional(i: int, S: np.ndarray, U: np.ndarray, lam: np.ndarray,
                       s2e: float, psi2: float):
    """Full conditional of one factor row in the symmetric model."""
    T = S.shape[0]
    W = U * lam
    gram = W.T @ W - np.outer(W[i], W[i])
    prec = T * gram / s2e + np.eye(U.shape[1]) / psi2
    targ = np.array(S[:, i, :])
    targ[:, i] = 0.0
    lin = W.T @ targ.sum(axis=0) / s2e
    return prec, lin


def draw_factors_ul(rng, S: np.ndarray, U: np.ndarray, lam: np.ndarray,
                    s2e: float, psi2: float):
    """Sequential Gibbs sweep over factor rows of the symmetric model."""
    n, rank = U.shape
    if rank == 0:
        return U
    U = np.array(U)
    for i in range(n):
        prec, lin = ul_row_conditional(i, S, U, lam, s2e, psi2)
        U[i] = _draw_row(rng, prec, lin)
    return U


def draw_lambda(rng, S: np.ndarray, U: np.ndarray, s2e: float,
                prior_var: float = 1e4) -> np.ndarray:
    """Draw the symmetric-model weight vector from its Gaussian conditional.

    Each unordered dyad contributes a linear observation with design row
    u_i * u_j (elementwise).  Weights are unconstrained in sign.
    """
    rank = U.shape[1]
    if rank == 0:
        return np.zeros(0)
    iu, ju = np.triu_indices(U.shape[0], k=1)
    Q = U[iu] * U[ju]                                  # (pairs, rank)
    y = S[:, iu, ju].reshape(S.shape[0], -1)
    prec = S.shape[0] * (Q.T @ Q) / s2e + np.eye(rank) / prior_var
    lin = Q.T @ y.sum(axis=0) / s2e
    return _draw_row(rng, prec, lin)


def draw_psi2(rng, mats, a0: float = 2.0, b0: float = 1.0) -> float:
    """Inverse-gamma update of the shared factor-row prior variance."""
    size, ss = 0, 0.0
    for M in mats:
        size += M.size
        ss += float((M ** 2).sum())
    shape = a0 + size / 2.0
    return (b0 + ss / 2.0) / rng.standard_gamma(shape)


def init_factors(S: np.ndarray, rank: int, symmetric: bool):
    """Initialize factors from the leading singular/eigen pairs of the
    zero-imputed mean residual matrix (fast burn-in)."""
    M = np.nan_to_num(np.asarray(S, dtype=float), nan=0.0)
    if M.ndim == 3:
        M = M.mean(axis=0)
    n = M.shape[0]
    if rank == 0:
        if symmetric:
            return np.zeros((n, 0)), np.zeros(0)
        return np.zeros((n, 0)), np.zeros((n, 0))
    if symmetric:
        Msym = 0.5 * (M + M.T)
        vals, vecs = np.linalg.eigh(Msym)
        order = np.argsort(-np.abs(vals))[:rank]
        return vecs[:, order], vals[order]
    left, sv, right_t = np.linalg.svd(M, full_matrices=False)
    scale = np.sqrt(sv[:rank])
    return left[:, :rank] * scale, right_t[:rank].T * scale


def factor_point_estimates(M: np.ndarray, rank: int, symmetric: bool):
    """Factor a posterior-mean multiplicative matrix into point estimates.

    Returns (U, V) for asymmetric models and (U, lam) for symmetric ones.
    """
    return init_factors(M, rank, symmetric)
