"""Social relations covariance model: covariance map and Gibbs updates.

The error model couples the two cells of each dyad: (e_ij, e_ji) pairs are
i.i.d. mean-zero bivariate normal with common variance s2e and correlation
rho.  Additive sender/receiver effects (a_i, b_i) are i.i.d. bivariate
normal with covariance cov_ab.

The regression draw treats (beta, a, b) as one Gaussian block.  Inverting
the 2x2 dyad-pair error covariance gives per-pair weights

    kappa1 = 1 / (s2e (1 - rho^2)),   kappa2 = -rho / (s2e (1 - rho^2)),

so the likelihood part of the posterior precision is
kappa1 * sum d_ij d_ij' + kappa2 * sum d_ij d_ji' over ordered pairs, where
d_ij stacks the covariate vector with the sender/receiver indicators.  All
pair sums reduce to closed forms in the design contractions below, which
keeps the per-sweep cost at O(n^2 p) plus one Cholesky of size p + 2n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import invwishart

__all__ = [
    "SrmParams",
    "AdditiveEffects",
    "srm_covariances",
    "DesignContraction",
    "beta_ab_normal_equations",
    "draw_beta_ab",
    "draw_cov_ab",
    "draw_dyad_cov",
    "rho_metropolis",
    "pair_stats",
    "draw_mvn_from_precision",
]


@dataclass(frozen=True)
class SrmParams:
    """Variance components: 2x2 effect covariance, dyadic correlation, error
    variance.  Probit-family models fix s2e at 1."""

    cov_ab: np.ndarray
    rho: float
    s2e: float

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov_ab, dtype=float))
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ValueError("cov_ab must be symmetric 2x2")
        if np.linalg.eigvalsh(cov)[0] < -1e-10:
            raise ValueError("cov_ab must be positive semidefinite")
        if not -1.0 < self.rho < 1.0:
            raise ValueError("dyadic correlation must lie in (-1, 1)")
        if self.s2e <= 0:
            raise ValueError("error variance must be positive")
        cov.setflags(write=False)
        object.__setattr__(self, "cov_ab", cov)


@dataclass(frozen=True)
class AdditiveEffects:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("sender and receiver effects must be equal-length vectors")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("additive effects must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def srm_covariances(params: SrmParams) -> dict:
    """The five covariances implied by the social relations covariance model."""
    va, vb = params.cov_ab[0, 0], params.cov_ab[1, 1]
    cab = params.cov_ab[0, 1]
    return {
        "var": va + 2 * cab + vb + params.s2e,
        "within_row": va,
        "within_col": vb,
        "row_col": cab,
        "reciprocal": 2 * cab + params.rho * params.s2e,
    }


class DesignContraction:
    """Design sums reused across sweeps.

    Computed once per fit from the (T, n, n, p) design with zeroed diagonal:
    gram = sum x_ij x_ij', cross_gram = sum x_ij x_ji', and the per-node
    covariate row/column sums needed for the indicator blocks.
    """

    def __init__(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        self.X = X
        self.T, self.n, _, self.p = X.shape
        self.gram = np.einsum("tijp,tijq->pq", X, X)
        self.cross_gram = np.einsum("tijp,tjiq->pq", X, X)
        self.row_sums = np.einsum("tijp->ip", X).T     # (p, n)
        self.col_sums = np.einsum("tjip->ip", X).T     # (p, n)

    def cross(self, S: np.ndarray):
        """Contractions of the design with a residual stack S (T, n, n)."""
        xs = np.einsum("tijp,tij->p", self.X, S)
        xst = np.einsum("tijp,tji->p", self.X, S)
        return xs, xst


def _pair_weights(rho: float, s2e: float):
    c = s2e * (1.0 - rho ** 2)
    return 1.0 / c, -rho / c


def beta_ab_normal_equations(contr: DesignContraction, S: np.ndarray,
                             rho: float, s2e: float, rvar: bool, cvar: bool,
                             cov_ab: np.ndarray, beta_prior_var: float):
    """Posterior precision and linear term of the joint (beta, a, b) block.

    S is the (T, n, n) latent stack minus the multiplicative term, diagonal
    zeroed.  Disabled effect vectors (rvar/cvar False) are dropped from the
    parameter block entirely.
    """
    T, n, p = contr.T, contr.n, contr.p
    k1, k2 = _pair_weights(rho, s2e)
    dim = p + n * (rvar + cvar)
    Q = np.zeros((dim, dim))
    rhs = np.zeros(dim)

    Q[:p, :p] = k1 * contr.gram + k2 * contr.cross_gram
    if p:
        Q[:p, :p] += np.eye(p) / beta_prior_var
        xs, xst = contr.cross(S)
        rhs[:p] = k1 * xs + k2 * xst

    if rvar or cvar:
        rs = np.einsum("tij->i", S)
        cs = np.einsum("tji->i", S)
        eyeJ = k1 * (n - 1) * T * np.eye(n) + k2 * T * (np.ones((n, n)) - np.eye(n))
        offJ = k1 * T * (np.ones((n, n)) - np.eye(n)) + k2 * (n - 1) * T * np.eye(n)

    sl_a = slice(p, p + n) if rvar else None
    sl_b = slice(p + n * rvar, p + n * rvar + n) if cvar else None

    if rvar:
        Q[:p, sl_a] = k1 * contr.row_sums + k2 * contr.col_sums
        Q[sl_a, :p] = Q[:p, sl_a].T
        Q[sl_a, sl_a] = eyeJ
        rhs[sl_a] = k1 * rs + k2 * cs
    if cvar:
        Q[:p, sl_b] = k1 * contr.col_sums + k2 * contr.row_sums
        Q[sl_b, :p] = Q[:p, sl_b].T
        Q[sl_b, sl_b] = eyeJ
        rhs[sl_b] = k1 * cs + k2 * rs
    if rvar and cvar:
        Q[sl_a, sl_b] = offJ
        Q[sl_b, sl_a] = offJ
        prec = np.linalg.inv(cov_ab)
        Q[sl_a, sl_a] += prec[0, 0] * np.eye(n)
        Q[sl_b, sl_b] += prec[1, 1] * np.eye(n)
        Q[sl_a, sl_b] += prec[0, 1] * np.eye(n)
        Q[sl_b, sl_a] += prec[0, 1] * np.eye(n)
    elif rvar:
        Q[sl_a, sl_a] += np.eye(n) / cov_ab[0, 0]
    elif cvar:
        Q[sl_b, sl_b] += np.eye(n) / cov_ab[1, 1]

    return Q, rhs, sl_a, sl_b


def draw_mvn_from_precision(rng, Q: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """One draw from N(Q^-1 rhs, Q^-1) via the Cholesky factor of Q."""
    try:
        L = np.linalg.cholesky(Q)
    except np.linalg.LinAlgError as e:
        raise np.linalg.LinAlgError(
            "conditional precision is not positive definite; the design may "
            "be collinear") from e
    mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    noise = np.linalg.solve(L.T, rng.standard_normal(len(rhs)))
    return mean + noise


def draw_beta_ab(rng, contr: DesignContraction, S: np.ndarray, rho: float,
                 s2e: float, rvar: bool, cvar: bool, cov_ab: np.ndarray,
                 beta_prior_var: float):
    """Joint Gibbs draw of the regression coefficients and additive effects."""
    Q, rhs, sl_a, sl_b = beta_ab_normal_equations(
        contr, S, rho, s2e, rvar, cvar, cov_ab, beta_prior_var)
    theta = draw_mvn_from_precision(rng, Q, rhs)
    n, p = contr.n, contr.p
    beta = theta[:p]
    a = theta[sl_a] if rvar else np.zeros(n)
    b = theta[sl_b] if cvar else np.zeros(n)
    return beta, a, b


def _invgamma(rng, shape: float, scale: float) -> float:
    return scale / rng.standard_gamma(shape)


def draw_cov_ab(rng, a: np.ndarray, b: np.ndarray, rvar: bool, cvar: bool,
                scale0: np.ndarray | None = None, df0: float = 4.0) -> np.ndarray:
    """Conjugate inverse-Wishart draw of the additive-effect covariance.

    With a single active effect the update reduces to an inverse-gamma draw;
    with none, the covariance is identically zero.
    """
    n = len(a)
    if scale0 is None:
        scale0 = np.eye(2)
    out = np.zeros((2, 2))
    if rvar and cvar:
        W = np.column_stack([a, b])
        return invwishart.rvs(df=df0 + n, scale=scale0 + W.T @ W, random_state=rng)
    if rvar:
        out[0, 0] = _invgamma(rng, (df0 + n) / 2.0, (scale0[0, 0] + a @ a) / 2.0)
    elif cvar:
        out[1, 1] = _invgamma(rng, (df0 + n) / 2.0, (scale0[1, 1] + b @ b) / 2.0)
    return out


def pair_stats(E: np.ndarray):
    """Sufficient statistics of the dyad-pair residuals.

    E is (T, n, n) with zero diagonal.  Returns (m, ss, cp): the number of
    pairs, the sum of squared residuals over both pair members, and the sum
    of within-pair cross products.
    """
    n = E.shape[1]
    iu, ju = np.triu_indices(n, k=1)
    e1 = E[:, iu, ju]
    e2 = E[:, ju, iu]
    m = e1.size
    ss = float((e1 ** 2).sum() + (e2 ** 2).sum())
    cp = float((e1 * e2).sum())
    return m, ss, cp


def draw_dyad_cov(rng, E: np.ndarray, dcor: bool,
                  ig_shape: float = 2.0, ig_scale: float = 0.5):
    """Gaussian-family draw of (rho, s2e) from the dyad-pair residuals.

    The pair covariance is exchangeable, so the half-sum and half-difference
    of each pair are independent with variances s2e(1 + rho) and
    s2e(1 - rho); both get conjugate inverse-gamma updates and are mapped
    back.  This keeps |rho| < 1 and s2e > 0 by construction.  With dcor off,
    rho is pinned at zero and s2e is updated from all residuals.
    """
    m, ss, cp = pair_stats(E)
    if not dcor:
        s2e = _invgamma(rng, ig_shape + m, ig_scale + ss / 2.0)
        return 0.0, s2e
    sum_sq = ss / 2.0 + cp      # sum over pairs of (e1 + e2)^2 / 2
    dif_sq = ss / 2.0 - cp
    lam_p = _invgamma(rng, ig_shape + m / 2.0, ig_scale + sum_sq / 2.0)
    lam_m = _invgamma(rng, ig_shape + m / 2.0, ig_scale + dif_sq / 2.0)
    s2e = 0.5 * (lam_p + lam_m)
    rho = (lam_p - lam_m) / (lam_p + lam_m)
    return rho, s2e


def _rho_loglik(rho: float, m: int, ss: float, cp: float) -> float:
    c = 1.0 - rho ** 2
    return -0.5 * m * np.log(c) - (ss - 2.0 * rho * cp) / (2.0 * c)


def rho_metropolis(rng, rho: float, E: np.ndarray, step: float):
    """Random-walk Metropolis update of rho for probit families (s2e = 1).

    The prior is uniform on (-1, 1); proposals outside are rejected.
    Returns (rho_new, accepted).
    """
    m, ss, cp = pair_stats(E)
    prop = rho + step * rng.standard_normal()
    if not -1.0 < prop < 1.0:
        return rho, False
    log_acc = _rho_loglik(prop, m, ss, cp) - _rho_loglik(rho, m, ss, cp)
    if np.log(rng.uniform()) < log_acc:
        return float(prop), True
    return rho, False
