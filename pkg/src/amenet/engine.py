"""Gibbs-sampler driver for additive and multiplicative effects models.

One sweep updates, in order: the latent sociomatrix (family-specific
constraints plus missing-cell imputation), the joint regression/additive
block, the additive-effect covariance, the dyadic error covariance, and the
multiplicative factors.  Every odens-th post-burn sweep records parameter
draws, accumulates posterior means, simulates a sociomatrix from the
current state and stores its goodness-of-fit statistics.

Chains are reproducible: the spec seed feeds numpy's SeedSequence and
multi-chain runs derive one child stream per chain by spawning that
sequence in chain order, so identical (data, spec, seed) gives identical
results bit for bit.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtr
from scipy.stats import norm

from . import factors as fx
from . import latent as lz
from . import srm
from .design import DesignTensor, build_design, build_design_rep
from .gof import GOF_NAMES, gofstats
from .sociomatrix import CovariateSet, LongitudinalData, Sociomatrix

__all__ = [
    "FAMILIES",
    "PROBIT_FAMILIES",
    "Priors",
    "ModelSpec",
    "ParamState",
    "FitResult",
    "fit_ame",
    "fit_ame_rep",
    "fit_symmetric",
    "simulate_Y",
    "summarize",
    "summary_table",
]

FAMILIES = ("nrm", "bin", "ord", "cbin", "frn", "rrl")
PROBIT_FAMILIES = frozenset({"bin", "ord", "cbin", "frn", "rrl"})
VC_NAMES = ("va", "cab", "vb", "rho", "ve")
VC_NAMES_SYM = ("va", "ve")
SYMMETRIC_FAMILIES = frozenset({"nrm", "bin", "ord"})


@dataclass(frozen=True)
class Priors:
    """Prior hyperparameters; None fields are resolved from the data.

    beta_var defaults to 100 times the sample variance of the observed
    outcomes for the Gaussian family and to 100 on the unit latent scale
    otherwise.
    """

    beta_var: float | None = None
    cov_ab_df: float = 4.0
    cov_ab_scale: float = 1.0          # multiplies the identity scale matrix
    dyad_ig_shape: float = 2.0
    dyad_ig_scale: float = 0.5
    psi2_shape: float = 2.0
    psi2_scale: float = 1.0
    lambda_var: float = 1e4

    def resolve_beta_var(self, y_obs: np.ndarray, family: str) -> float:
        if self.beta_var is not None:
            return float(self.beta_var)
        if family == "nrm":
            v = float(np.var(y_obs)) if y_obs.size > 1 else 1.0
            return 100.0 * max(v, 1e-8)
        return 100.0


@dataclass(frozen=True)
class ModelSpec:
    """Model family, effect structure and MCMC controls.

    burn/nscan/odens default to 500/10000/25, or 1000/100000/100 for
    symmetric models, whose factor term mixes more slowly.
    """

    family: str = "nrm"
    rank: int = 0
    symmetric: bool = False
    rvar: bool = True
    cvar: bool = True
    dcor: bool = True
    odmax: object = None
    burn: int | None = None
    nscan: int | None = None
    odens: int | None = None
    seed: int = 1
    priors: Priors = field(default_factory=Priors)

    def resolved(self) -> "ModelSpec":
        spec = self
        if spec.family not in FAMILIES:
            raise ValueError(f"unknown family {spec.family!r}; choose from {FAMILIES}")
        if spec.rank < 0:
            raise ValueError("rank must be nonnegative")
        if spec.odmax is not None and spec.family not in ("frn", "cbin"):
            raise ValueError("odmax applies only to the frn and cbin families")
        if spec.symmetric and spec.family not in SYMMETRIC_FAMILIES:
            raise ValueError(f"symmetric fits support families "
                             f"{sorted(SYMMETRIC_FAMILIES)}, not {spec.family!r}")
        if spec.family == "rrl" and spec.rvar:
            # row heights carry no information under within-row ranks
            spec = replace(spec, rvar=False)
        burn = spec.burn if spec.burn is not None else (1000 if spec.symmetric else 500)
        nscan = spec.nscan if spec.nscan is not None else (100000 if spec.symmetric else 10000)
        odens = spec.odens if spec.odens is not None else (100 if spec.symmetric else 25)
        if nscan % odens != 0:
            raise ValueError("odens must divide nscan evenly")
        if burn < 0 or nscan <= 0 or odens <= 0:
            raise ValueError("burn must be >= 0 and nscan, odens positive")
        return replace(spec, burn=burn, nscan=nscan, odens=odens)

    def to_dict(self) -> dict:
        odmax = self.odmax
        if isinstance(odmax, np.ndarray):
            odmax = odmax.tolist()
        return {
            "family": self.family, "rank": self.rank, "symmetric": self.symmetric,
            "rvar": self.rvar, "cvar": self.cvar, "dcor": self.dcor,
            "odmax": odmax, "burn": self.burn, "nscan": self.nscan,
            "odens": self.odens, "seed": self.seed,
            "priors": {k: getattr(self.priors, k) for k in (
                "beta_var", "cov_ab_df", "cov_ab_scale", "dyad_ig_shape",
                "dyad_ig_scale", "psi2_shape", "psi2_scale", "lambda_var")},
        }


@dataclass
class ParamState:
    """Current values of every sampled quantity in one chain."""

    beta: np.ndarray
    a: np.ndarray
    b: np.ndarray
    cov_ab: np.ndarray
    rho: float
    s2e: float
    U: np.ndarray
    V: np.ndarray        # empty in symmetric mode
    lam: np.ndarray      # symmetric factor weights; empty otherwise
    psi2: float
    Z: np.ndarray        # (T, n, n) latent stack, diagonal zeroed
    symmetric: bool = False

    def mult(self) -> np.ndarray:
        if self.symmetric:
            return fx.multiplicative_mean(self.U, lam=self.lam)
        return fx.multiplicative_mean(self.U, V=self.V)

    def mean(self, design: DesignTensor) -> np.ndarray:
        """(T, n, n) latent mean under the current state, diagonal zeroed."""
        M = design.linear_predictor(self.beta)
        M = M + self.a[None, :, None] + self.b[None, None, :] + self.mult()[None, :, :]
        idx = np.arange(M.shape[1])
        M[:, idx, idx] = 0.0
        return M


@dataclass
class FitResult:
    """Posterior draws, predictive means and point summaries from one fit."""

    BETA: np.ndarray
    beta_names: tuple[str, ...]
    VC: np.ndarray
    vc_names: tuple[str, ...]
    APM: np.ndarray
    BPM: np.ndarray
    UVPM: np.ndarray
    YPM: np.ndarray
    U: np.ndarray
    V: np.ndarray
    L: np.ndarray
    GOF: np.ndarray
    labels: tuple[str, ...]
    family: str
    symmetric: bool
    rank: int
    spec: dict
    info: dict
    U_draws: np.ndarray | None = None
    V_draws: np.ndarray | None = None

    @property
    def n_draws(self) -> int:
        return self.BETA.shape[0]

    def summary(self) -> str:
        return summarize(self)

    def save(self, directory) -> None:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        _write_draws(out / "BETA.csv", self.BETA, self.beta_names)
        _write_draws(out / "VC.csv", self.VC, self.vc_names)
        gof_index = ["observed"] + [str(i) for i in range(self.GOF.shape[0] - 1)]
        _write_draws(out / "GOF.csv", self.GOF, GOF_NAMES, index=gof_index)
        _write_vector(out / "APM.csv", self.labels, self.APM)
        _write_vector(out / "BPM.csv", self.labels, self.BPM)
        _write_square(out / "UVPM.csv", self.labels, self.UVPM)
        if self.YPM.ndim == 2:
            _write_square(out / "YPM.csv", self.labels, self.YPM)
        else:
            for t in range(self.YPM.shape[0]):
                _write_square(out / f"YPM_t{t + 1}.csv", self.labels, self.YPM[t])
        cols = [f"f{k + 1}" for k in range(self.rank)]
        _write_table(out / "U.csv", "node", self.labels, cols, np.atleast_2d(self.U))
        if self.symmetric:
            _write_vector(out / "L.csv", [str(k + 1) for k in range(self.rank)],
                          self.L, header="component,value")
        else:
            _write_table(out / "V.csv", "node", self.labels, cols,
                         np.atleast_2d(self.V))
        with open(out / "spec.json", "w") as f:
            json.dump({"spec": self.spec, "labels": list(self.labels),
                       "info": self.info, "beta_names": list(self.beta_names),
                       "vc_names": list(self.vc_names)}, f, indent=2)
        with open(out / "summary.txt", "w") as f:
            f.write(self.summary() + "\n")

    @classmethod
    def load(cls, directory) -> "FitResult":
        out = Path(directory)
        with open(out / "spec.json") as f:
            meta = json.load(f)
        labels = tuple(meta["labels"])
        spec = meta["spec"]
        sym, rank = spec["symmetric"], spec["rank"]
        beta_names, BETA = _read_draws(out / "BETA.csv")
        vc_names, VC = _read_draws(out / "VC.csv")
        _, GOF = _read_draws(out / "GOF.csv")
        if (out / "YPM.csv").exists():
            YPM = _read_square(out / "YPM.csv")
        else:
            parts = sorted(out.glob("YPM_t*.csv"),
                           key=lambda p: int(p.stem.split("_t")[1]))
            YPM = np.stack([_read_square(p) for p in parts], axis=0)
        U = _read_table(out / "U.csv", rank)
        if sym:
            V = np.zeros((len(labels), 0))
            L = _read_vector(out / "L.csv") if rank else np.zeros(0)
        else:
            V = _read_table(out / "V.csv", rank)
            L = np.zeros(0)
        return cls(BETA=BETA, beta_names=beta_names, VC=VC, vc_names=vc_names,
                   APM=_read_vector(out / "APM.csv"),
                   BPM=_read_vector(out / "BPM.csv"),
                   UVPM=_read_square(out / "UVPM.csv"), YPM=YPM, U=U, V=V, L=L,
                   GOF=GOF, labels=labels, family=spec["family"], symmetric=sym,
                   rank=rank, spec=spec, info=meta.get("info", {}))


def _write_draws(path, M, names, index=None):
    with open(path, "w") as f:
        f.write("draw," + ",".join(names) + "\n")
        for r, row in enumerate(np.atleast_2d(M)):
            tag = index[r] if index is not None else str(r)
            f.write(tag + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _write_vector(path, labels, v, header="node,value"):
    with open(path, "w") as f:
        f.write(header + "\n")
        for lab, val in zip(labels, v):
            f.write(f"{lab},{float(val)!r}\n")


def _write_square(path, labels, M):
    with open(path, "w") as f:
        f.write("," + ",".join(labels) + "\n")
        for lab, row in zip(labels, M):
            f.write(lab + "," + ",".join(
                "NA" if np.isnan(v) else repr(float(v)) for v in row) + "\n")


def _write_table(path, index_name, labels, cols, M):
    with open(path, "w") as f:
        f.write(index_name + ("," if cols else "") + ",".join(cols) + "\n")
        for lab, row in zip(labels, M):
            f.write(lab + ("," if cols else "") +
                    ",".join(repr(float(v)) for v in row[:len(cols)]) + "\n")


def _read_draws(path):
    rows = [l.strip().split(",") for l in open(path) if l.strip()]
    names = tuple(rows[0][1:])
    vals = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return names, vals.reshape(len(rows) - 1, len(names))


def _read_square(path):
    rows = [l.rstrip("\n").split(",") for l in open(path) if l.strip()]
    return np.array([[np.nan if v == "NA" else float(v) for v in r[1:]]
                     for r in rows[1:]])


def _read_vector(path):
    rows = [l.strip().split(",") for l in open(path) if l.strip()][1:]
    return np.array([float(r[1]) for r in rows])


def _read_table(path, rank):
    rows = [l.rstrip("\n").split(",") for l in open(path) if l.strip()][1:]
    if rank == 0:
        return np.zeros((len(rows), 0))
    return np.array([[float(v) for v in r[1:rank + 1]] for r in rows])


# ---------------------------------------------------------------------------
# simulation from a parameter state

def _simulate_errors(rng, shape_tnn, rho, s2e, symmetric):
    T, n, _ = shape_tnn
    E = np.zeros(shape_tnn)
    iu, ju = np.triu_indices(n, k=1)
    sd = np.sqrt(s2e)
    if symmetric:
        e = sd * rng.standard_normal((T, iu.size))
        E[:, iu, ju] = e
        E[:, ju, iu] = e
        return E
    z1 = rng.standard_normal((T, iu.size))
    z2 = rng.standard_normal((T, iu.size))
    E[:, iu, ju] = sd * z1
    E[:, ju, iu] = sd * (rho * z1 + np.sqrt(1.0 - rho ** 2) * z2)
    return E


def _ranks(z):
    return np.argsort(np.argsort(z, kind="stable"), kind="stable")


def _simulate_slice(rng, Zs, Yt, family, odmax, symmetric):
    """Map one latent slice to the outcome scale, respecting missingness."""
    n = Zs.shape[0]
    obs = ~np.isnan(Yt)
    np.fill_diagonal(obs, False)
    out = np.full((n, n), np.nan)
    if symmetric:
        iu, ju = np.triu_indices(n, k=1)
        keep = obs[iu, ju]
        di, dj = iu[keep], ju[keep]
        z = Zs[di, dj]
        if family == "nrm":
            vals = z
        elif family == "bin":
            vals = (z > 0).astype(float)
        elif family == "ord":
            vals = np.sort(Yt[di, dj])[_ranks(z)]
        else:
            raise ValueError(f"symmetric simulation unsupported for {family!r}")
        out[di, dj] = vals
        out[dj, di] = vals
        return out
    if family == "nrm":
        out[obs] = Zs[obs]
    elif family in ("bin", "cbin"):
        out[obs] = (Zs[obs] > 0).astype(float)
    elif family == "ord":
        out[obs] = np.sort(Yt[obs])[_ranks(Zs[obs])]
    elif family == "rrl":
        for i in range(n):
            sel = obs[i]
            if sel.any():
                out[i, sel] = np.sort(Yt[i, sel])[_ranks(Zs[i, sel])]
    elif family == "frn":
        cap = np.broadcast_to(np.asarray(odmax, dtype=float), (n,))
        out[obs] = 0.0
        for i in range(n):
            sel = np.nonzero(obs[i])[0]
            pos = sel[Zs[i, sel] > 0]
            take = min(len(pos), int(cap[i]))
            if take > 0:
                top = pos[np.argsort(-Zs[i, pos], kind="stable")][:take]
                out[i, top] = np.arange(take, 0, -1, dtype=float)
    else:
        raise ValueError(f"unknown family {family!r}")
    return out


def simulate_Y(rng, M, rho, s2e, family, Y_template, odmax=None,
               symmetric=False) -> np.ndarray:
    """Simulate outcome data from the model at fixed parameter values.

    M is the latent mean, (n, n) or (T, n, n).  Gaussian outcomes are the
    latent draws themselves; binary families threshold at zero; the ordinal
    families rank-match the latent draws to the observed outcome values
    (within rows for rrl); frn ranks each row's largest positive latent
    values within the nomination budget, so simulated outdegrees never
    exceed it.  Cells missing in Y_template stay missing.
    """
    M = np.asarray(M, dtype=float)
    squeeze = M.ndim == 2
    if squeeze:
        M = M[None, :, :]
    Yt = np.asarray(Y_template, dtype=float)
    if Yt.ndim == 2:
        Yt = np.broadcast_to(Yt, M.shape)
    Zs = M + _simulate_errors(rng, M.shape, rho, s2e, symmetric)
    out = np.stack([
        _simulate_slice(rng, Zs[t], Yt[t], family, odmax, symmetric)
        for t in range(M.shape[0])])
    return out[0] if squeeze else out


# ---------------------------------------------------------------------------
# summaries

def summary_table(fit: FitResult):
    """Per-coefficient posterior summary rows and variance-component rows."""
    coef = []
    for k, name in enumerate(fit.beta_names):
        draws = fit.BETA[:, k]
        pmean, psd = float(draws.mean()), float(draws.std(ddof=1))
        z = pmean / psd if psd > 0 else np.inf * np.sign(pmean) if pmean else 0.0
        pval = 2.0 * float(norm.sf(abs(z))) if np.isfinite(z) else 0.0
        coef.append({"name": name, "pmean": pmean, "psd": psd,
                     "z": float(z), "pval": pval})
    vc = []
    for k, name in enumerate(fit.vc_names):
        draws = fit.VC[:, k]
        vc.append({"name": name, "pmean": float(draws.mean()),
                   "psd": float(draws.std(ddof=1))})
    return coef, vc


def summarize(fit: FitResult) -> str:
    """Text summary in the shape of the standard regression tables."""
    coef, vc = summary_table(fit)
    width = max([len(r["name"]) for r in coef + vc] + [3])
    lines = ["", "Regression coefficients:"]
    head = f"{'':<{width}} {'pmean':>7} {'psd':>6} {'z-stat':>7} {'p-val':>6}"
    lines.append(head)
    for r in coef:
        lines.append(f"{r['name']:<{width}} {r['pmean']:>7.3f} {r['psd']:>6.3f} "
                     f"{r['z']:>7.3f} {r['pval']:>6.3f}")
    lines += ["", "Variance parameters:"]
    lines.append(f"{'':<{width}} {'pmean':>7} {'psd':>6}")
    for r in vc:
        lines.append(f"{r['name']:<{width}} {r['pmean']:>7.3f} {r['psd']:>6.3f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# fitting

def _as_stack(Y):
    """Normalize input to a (T, n, n) stack plus labels."""
    if isinstance(Y, LongitudinalData):
        stack = np.stack([sm.values for sm in Y.Y], axis=0)
        return np.array(stack), Y.labels
    if isinstance(Y, Sociomatrix):
        return np.array(Y.values)[None, :, :], Y.labels
    vals = np.asarray(Y, dtype=float)
    if vals.ndim == 2:
        sm = Sociomatrix(values=vals, labels=())
        return np.array(sm.values)[None, :, :], sm.labels
    raise ValueError("outcome must be a Sociomatrix or square matrix")


def _check_design_rank(design: DesignTensor):
    p = design.p
    if p == 0:
        return
    X = design.values.reshape(-1, p)
    gram = X.T @ X
    scale = np.sqrt(np.maximum(np.diag(gram), 1e-30))
    corr = gram / np.outer(scale, scale)
    eigvals = np.linalg.eigvalsh(corr)
    if eigvals[0] < 1e-10:
        from scipy.linalg import qr
        _, R, piv = qr(X, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        keep = diag > diag[0] * 1e-10 if diag.size else np.array([], bool)
        bad = [design.names[j] for j in piv[keep.sum():]]
        raise ValueError(f"singular design; collinear slices: {bad}")


def _init_state(rng, Ystack, design, spec, odmax):
    T, n, _ = Ystack.shape
    Z = np.stack([lz.init_z(Ystack[t], spec.family, odmax) for t in range(T)])
    if spec.symmetric:
        Z = 0.5 * (Z + np.swapaxes(Z, 1, 2))
    center = Z - Z.mean(axis=0).mean() if spec.family == "nrm" else Z
    if spec.symmetric:
        U, lam = fx.init_factors(center, spec.rank, symmetric=True)
        V = np.zeros((n, 0))
    else:
        U, V = fx.init_factors(center, spec.rank, symmetric=False)
        lam = np.zeros(0)
    s2e = 1.0
    if spec.family == "nrm":
        obs = ~np.isnan(Ystack)
        s2e = max(float(np.nanvar(Ystack)), 1e-6) if obs.any() else 1.0
    return ParamState(beta=np.zeros(design.p), a=np.zeros(n), b=np.zeros(n),
                      cov_ab=np.eye(2), rho=0.0, s2e=s2e, U=U, V=V, lam=lam,
                      psi2=1.0, Z=Z, symmetric=spec.symmetric)


def _update_z(rng, state, M, Ystack, spec, odmax):
    for t in range(Ystack.shape[0]):
        Zt, Mt, Yt = state.Z[t], M[t], Ystack[t]
        if spec.symmetric:
            lz.update_z_symmetric(rng, Zt, Mt, Yt, spec.family, s2e=state.s2e)
        elif spec.family == "nrm":
            miss = np.isnan(Yt)
            np.fill_diagonal(miss, False)
            lz.impute_missing(rng, Zt, Mt, state.rho, miss, s2e=state.s2e)
        elif spec.family == "bin":
            lz.update_z_bin(rng, Zt, Mt, Yt, state.rho)
        elif spec.family == "ord":
            lz.update_z_ord(rng, Zt, Mt, Yt, state.rho)
        elif spec.family == "rrl":
            lz.update_z_rrl(rng, Zt, Mt, Yt, state.rho)
        elif spec.family == "frn":
            lz.update_z_frn(rng, Zt, Mt, Yt, state.rho, odmax)
        elif spec.family == "cbin":
            lz.update_z_cbin(rng, Zt, Mt, Yt, state.rho, odmax)
        idx = np.arange(Zt.shape[0])
        Zt[idx, idx] = 0.0


def _beta_a_sym_equations(contr, S, s2e, rvar, s2a, beta_var):
    """Normal equations of (beta, a) for the symmetric model (i.i.d. errors
    over dyads, each nodal effect entering both of its dyad cells)."""
    T, n, p = contr.T, contr.n, contr.p
    dim = p + (n if rvar else 0)
    Q = np.zeros((dim, dim))
    rhs = np.zeros(dim)
    if p:
        Q[:p, :p] = contr.gram / (2.0 * s2e) + np.eye(p) / beta_var
        xs, _ = contr.cross(S)
        rhs[:p] = xs / (2.0 * s2e)
    if rvar:
        sl = slice(p, dim)
        Q[:p, sl] = contr.row_sums / s2e
        Q[sl, :p] = Q[:p, sl].T
        J = np.ones((n, n)) - np.eye(n)
        Q[sl, sl] = T * ((n - 1) * np.eye(n) + J) / s2e + np.eye(n) / s2a
        rhs[sl] = np.einsum("tij->i", S) / s2e
    return Q, rhs


def _sweep(rng, state, Ystack, design, contr, spec, odmax, beta_var, probit,
           rho_ctl):
    T, n, _ = Ystack.shape
    pr = spec.priors

    # 1. latent update and imputation
    M = state.mean(design)
    _update_z(rng, state, M, Ystack, spec, odmax)

    # 2. joint regression and additive effects
    mult = state.mult()
    S = state.Z - mult[None, :, :]
    idx = np.arange(n)
    S[:, idx, idx] = 0.0
    if spec.symmetric:
        s2a = state.cov_ab[0, 0]
        Q, rhs = _beta_a_sym_equations(contr, S, state.s2e, spec.rvar, s2a,
                                       beta_var)
        theta = srm.draw_mvn_from_precision(rng, Q, rhs)
        state.beta = theta[:design.p]
        state.a = theta[design.p:] if spec.rvar else np.zeros(n)
        state.b = state.a
    else:
        state.beta, state.a, state.b = srm.draw_beta_ab(
            rng, contr, S, state.rho, state.s2e, spec.rvar, spec.cvar,
            state.cov_ab, beta_var)

    # 3. additive-effect covariance
    scale0 = pr.cov_ab_scale * np.eye(2)
    if spec.symmetric:
        state.cov_ab = srm.draw_cov_ab(rng, state.a, state.a, spec.rvar, False,
                                       scale0=scale0, df0=pr.cov_ab_df)
    else:
        state.cov_ab = srm.draw_cov_ab(rng, state.a, state.b, spec.rvar,
                                       spec.cvar, scale0=scale0, df0=pr.cov_ab_df)

    # 4. dyadic error covariance
    E = state.Z - state.mean(design)
    E[:, idx, idx] = 0.0
    if spec.symmetric:
        if not probit:
            iu, ju = np.triu_indices(n, k=1)
            resid = E[:, iu, ju]
            state.s2e = (pr.dyad_ig_scale + float((resid ** 2).sum()) / 2.0) / \
                rng.standard_gamma(pr.dyad_ig_shape + resid.size / 2.0)
    elif probit:
        if spec.dcor:
            new_rho, accepted = srm.rho_metropolis(rng, state.rho, E,
                                                   rho_ctl["step"])
            state.rho = new_rho
            rho_ctl["proposals"] += 1
            rho_ctl["accepts"] += int(accepted)
    else:
        state.rho, state.s2e = srm.draw_dyad_cov(
            rng, E, spec.dcor, ig_shape=pr.dyad_ig_shape,
            ig_scale=pr.dyad_ig_scale)

    # 5. multiplicative factors
    if spec.rank > 0:
        S = state.Z - design.linear_predictor(state.beta) \
            - state.a[None, :, None] - state.b[None, None, :]
        S[:, idx, idx] = 0.0
        if spec.symmetric:
            state.U = fx.draw_factors_ul(rng, S, state.U, state.lam,
                                         state.s2e, state.psi2)
            state.lam = fx.draw_lambda(rng, S, state.U, state.s2e,
                                       prior_var=pr.lambda_var)
            state.psi2 = fx.draw_psi2(rng, [state.U], a0=pr.psi2_shape,
                                      b0=pr.psi2_scale)
        else:
            state.U, state.V = fx.draw_factors_uv(rng, S, state.U, state.V,
                                                  state.rho, state.s2e,
                                                  state.psi2)
            state.psi2 = fx.draw_psi2(rng, [state.U, state.V],
                                      a0=pr.psi2_shape, b0=pr.psi2_scale)


def _ypm_increment(state, design, Ystack, family):
    """Per-draw contribution to the posterior predictive mean.

    Gaussian: the current latent stack (observed cells are the data, missing
    cells the current imputation).  Binary families: the predictive
    probability of a tie given the current mean (the unit-variance dyadic
    noise integrates to a probit transform).  Rank-based families: the
    current latent stack, reported on the latent scale.
    """
    if family in ("bin", "cbin"):
        return ndtr(state.mean(design))
    return np.array(state.Z)


def _run_chain(seed_seq, Ystack, design, contr, spec, odmax, beta_var, audit):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    T, n, _ = Ystack.shape
    probit = spec.family in PROBIT_FAMILIES
    state = _init_state(rng, Ystack, design, spec, odmax)
    n_draws = spec.nscan // spec.odens

    BETA = np.empty((n_draws, design.p))
    VC = np.empty((n_draws, 2 if spec.symmetric else 5))
    GOF = np.empty((n_draws, 4))
    APM = np.zeros(n)
    BPM = np.zeros(n)
    UVPM = np.zeros((n, n))
    YPM = np.zeros((T, n, n))
    U_draws = np.empty((n_draws, n, spec.rank)) if spec.rank else None
    V_draws = np.empty((n_draws, n, spec.rank)) \
        if spec.rank and not spec.symmetric else None

    rho_ctl = {"step": 0.1, "accepts": 0, "proposals": 0}
    window = {"accepts": 0, "proposals": 0}
    violations = 0
    saved = 0
    total = spec.burn + spec.nscan
    for it in range(total):
        pre_acc, pre_prop = rho_ctl["accepts"], rho_ctl["proposals"]
        _sweep(rng, state, Ystack, design, contr, spec, odmax, beta_var,
               probit, rho_ctl)
        if probit and spec.dcor and it < spec.burn:
            # adapt the proposal scale toward a healthy acceptance rate,
            # burn-in only so the post-burn kernel stays fixed
            window["accepts"] += rho_ctl["accepts"] - pre_acc
            window["proposals"] += rho_ctl["proposals"] - pre_prop
            if window["proposals"] >= 50:
                rate = window["accepts"] / window["proposals"]
                rho_ctl["step"] = float(np.clip(
                    rho_ctl["step"] * np.exp(rate - 0.44), 1e-3, 2.0))
                window["accepts"] = window["proposals"] = 0
        if audit and not spec.symmetric:
            for t in range(T):
                violations += lz.audit_constraints(state.Z[t], Ystack[t],
                                                   spec.family, odmax)
        if it >= spec.burn and (it - spec.burn) % spec.odens == spec.odens - 1:
            BETA[saved] = state.beta
            if spec.symmetric:
                VC[saved] = (state.cov_ab[0, 0], state.s2e)
            else:
                VC[saved] = (state.cov_ab[0, 0], state.cov_ab[0, 1],
                             state.cov_ab[1, 1], state.rho, state.s2e)
            APM += state.a
            BPM += state.b
            UVPM += state.mult()
            YPM += _ypm_increment(state, design, Ystack, spec.family)
            Ysim = simulate_Y(rng, state.mean(design), state.rho, state.s2e,
                              spec.family, Ystack, odmax=odmax,
                              symmetric=spec.symmetric)
            GOF[saved] = np.mean([gofstats(Ysim[t]) for t in range(T)], axis=0)
            if U_draws is not None:
                U_draws[saved] = state.U
            if V_draws is not None:
                V_draws[saved] = state.V
            saved += 1

    acc_rate = rho_ctl["accepts"] / rho_ctl["proposals"] \
        if rho_ctl["proposals"] else None
    return {"BETA": BETA, "VC": VC, "GOF": GOF, "APM": APM, "BPM": BPM,
            "UVPM": UVPM, "YPM": YPM, "U_draws": U_draws, "V_draws": V_draws,
            "n_draws": n_draws, "rho_accept": acc_rate,
            "rho_step": rho_ctl["step"], "violations": violations}


def _resolve_odmax(spec, Ystack):
    if spec.family not in ("frn", "cbin"):
        return None
    n = Ystack.shape[1]
    if spec.odmax is None:
        outdeg = np.nansum(Ystack > 0, axis=2).max(axis=0)
        return np.full(n, float(outdeg.max()))
    odmax = np.asarray(spec.odmax, dtype=float)
    if odmax.ndim == 0:
        odmax = np.full(n, float(odmax))
    if odmax.shape != (n,):
        raise ValueError(f"odmax must be scalar or length {n}")
    return odmax


def _fit(Ystack, labels, design, spec, chains, audit):
    spec = spec.resolved()
    if design.p != len(design.names):
        raise ValueError("design names out of sync")
    _check_design_rank(design)

    # cells with incomplete design rows are unusable as outcomes: treat them
    # as missing and zero their design entries (the imputation model then
    # carries them without informing the regression)
    design_missing = np.isnan(design.values).any(axis=3)
    if design_missing.any():
        Ystack = np.array(Ystack)
        Ystack[design_missing] = np.nan
        design = DesignTensor(values=np.nan_to_num(design.values, nan=0.0),
                              names=design.names)

    obs = ~np.isnan(Ystack)
    beta_var = spec.priors.resolve_beta_var(Ystack[obs], spec.family)
    odmax = _resolve_odmax(spec, Ystack)
    if spec.symmetric:
        for t in range(Ystack.shape[0]):
            sm = Sociomatrix(values=Ystack[t], labels=labels)
            if not sm.is_symmetric():
                raise ValueError("symmetric fit requires symmetric observed data")

    contr = srm.DesignContraction(design.values)
    t0 = time.perf_counter()
    children = np.random.SeedSequence(spec.seed).spawn(chains)
    runs = [_run_chain(ss, Ystack, design, contr, spec, odmax, beta_var, audit)
            for ss in children]

    total_draws = sum(r["n_draws"] for r in runs)
    BETA = np.vstack([r["BETA"] for r in runs])
    VC = np.vstack([r["VC"] for r in runs])
    APM = sum(r["APM"] for r in runs) / total_draws
    BPM = sum(r["BPM"] for r in runs) / total_draws
    UVPM = sum(r["UVPM"] for r in runs) / total_draws
    YPM = sum(r["YPM"] for r in runs) / total_draws
    idx = np.arange(Ystack.shape[1])
    YPM[:, idx, idx] = np.nan
    T = Ystack.shape[0]
    gof_obs = np.mean([gofstats(Ystack[t]) for t in range(T)], axis=0)
    GOF = np.vstack([gof_obs[None, :]] + [r["GOF"] for r in runs])
    U_draws = np.concatenate([r["U_draws"] for r in runs]) \
        if spec.rank else None
    V_draws = np.concatenate([r["V_draws"] for r in runs]) \
        if spec.rank and not spec.symmetric else None

    if spec.symmetric:
        U, L = fx.factor_point_estimates(UVPM, spec.rank, symmetric=True)
        V = np.zeros((Ystack.shape[1], 0))
    else:
        U, V = fx.factor_point_estimates(UVPM, spec.rank, symmetric=False)
        L = np.zeros(0)

    info = {
        "chains": chains,
        "draws": int(total_draws),
        "runtime_s": time.perf_counter() - t0,
        "rho_accept_rate": runs[0]["rho_accept"],
        "rho_step": runs[0]["rho_step"],
        "beta_var": beta_var,
        "constraint_violations": int(sum(r["violations"] for r in runs))
        if audit else None,
    }
    resolved = spec.to_dict()
    resolved["priors"]["beta_var"] = beta_var
    resolved["odmax"] = odmax.tolist() if odmax is not None else None
    return FitResult(
        BETA=BETA, beta_names=design.names, VC=VC,
        vc_names=VC_NAMES_SYM if spec.symmetric else VC_NAMES,
        APM=APM, BPM=BPM, UVPM=UVPM,
        YPM=YPM[0] if T == 1 else YPM,
        U=U, V=V, L=L, GOF=GOF, labels=tuple(labels), family=spec.family,
        symmetric=spec.symmetric, rank=spec.rank, spec=resolved, info=info,
        U_draws=U_draws, V_draws=V_draws)


def fit_ame(Y, covariates: CovariateSet | None = None,
            spec: ModelSpec | None = None, chains: int = 1,
            audit: bool = False) -> FitResult:
    """Fit an additive and multiplicative effects model to one sociomatrix."""
    spec = (spec or ModelSpec()).resolved()
    Ystack, labels = _as_stack(Y)
    design = build_design(Ystack.shape[1], covariates, spec.family,
                          symmetric=spec.symmetric)
    return _fit(Ystack, labels, design, spec, chains, audit)


def fit_ame_rep(data: LongitudinalData, spec: ModelSpec | None = None,
                chains: int = 1, audit: bool = False) -> FitResult:
    """Fit the replicated model: common parameters, independent errors per
    time point."""
    spec = (spec or ModelSpec()).resolved()
    Ystack, labels = _as_stack(data)
    design = build_design_rep(data, spec.family, symmetric=spec.symmetric)
    return _fit(Ystack, labels, design, spec, chains, audit)


def fit_symmetric(Y, covariates: CovariateSet | None = None,
                  spec: ModelSpec | None = None, chains: int = 1) -> FitResult:
    """Fit the symmetric variant (single additive effect, u_i' diag(lam) u_j
    factor term).  The spec must have symmetric=True."""
    spec = (spec or ModelSpec(symmetric=True))
    if not spec.symmetric:
        raise ValueError("fit_symmetric requires spec.symmetric=True")
    return fit_ame(Y, covariates, spec, chains=chains)
