"""Command-line interface: fitting, goodness of fit, simulation, prediction
and covariate construction.

Every fit writes a result directory containing draw-indexed trace CSVs
(BETA.csv, VC.csv, GOF.csv), posterior-mean matrices, a paper-style
summary.txt and a spec.json that resolves every option needed to reproduce
the run bit-exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import factors as fx
from .design import lag_dyadic, nodal_product, same_category
from .engine import (FAMILIES, FitResult, ModelSpec, fit_ame, fit_ame_rep,
                     simulate_Y)
from .gof import GOF_NAMES, gof_compare, gofstats
from .sociomatrix import (CovariateSet, Sociomatrix, assemble_longitudinal,
                          load_covariates, load_nodal_table, load_sociomatrix,
                          write_sociomatrix)

__all__ = ["main"]


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _add_fit_flags(p):
    p.add_argument("--y", help="sociomatrix CSV/JSON")
    p.add_argument("--xd", action="append", default=[],
                   help="dyadic covariate file (square or long form); repeatable")
    p.add_argument("--xr", help="row-nodal covariate table")
    p.add_argument("--xc", help="column-nodal covariate table")
    p.add_argument("--model", default="nrm", choices=list(FAMILIES))
    p.add_argument("--rank", type=int, default=0)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--no-rvar", dest="rvar", action="store_false")
    p.add_argument("--no-cvar", dest="cvar", action="store_false")
    p.add_argument("--no-dcor", dest="dcor", action="store_false")
    p.add_argument("--odmax", help="nomination cap: a number or a node,value CSV")
    p.add_argument("--burn", type=int)
    p.add_argument("--nscan", type=int)
    p.add_argument("--odens", type=int)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--longitudinal",
                   help="directory of time-slice subdirectories (each with "
                        "y.csv and optional xd_*.csv, xr.csv, xc.csv)")
    p.add_argument("--out", required=True, help="output directory")


def _parse_odmax(arg):
    if arg is None:
        return None
    try:
        return float(arg)
    except ValueError:
        pass
    rows = [l.strip().split(",") for l in open(arg) if l.strip()][1:]
    return np.array([float(r[1]) for r in rows])


def _spec_from_args(args) -> ModelSpec:
    return ModelSpec(family=args.model, rank=args.rank,
                     symmetric=args.symmetric, rvar=args.rvar, cvar=args.cvar,
                     dcor=args.dcor, odmax=_parse_odmax(args.odmax),
                     burn=args.burn, nscan=args.nscan, odens=args.odens,
                     seed=args.seed)


def _load_static(args):
    Y = load_sociomatrix(args.y)
    covs = None
    if args.xd or args.xr or args.xc:
        covs = load_covariates(Y.labels, dyadic=args.xd or None,
                               row=args.xr, col=args.xc)
    return Y, covs


def _load_longitudinal(root):
    root = Path(root)
    slice_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not slice_dirs:
        raise ValueError(f"no time-slice subdirectories under {root}")
    slices = []
    for d in slice_dirs:
        Y = load_sociomatrix(d / "y.csv")
        xd = sorted(d.glob("xd_*.csv")) or None
        xr = d / "xr.csv" if (d / "xr.csv").exists() else None
        xc = d / "xc.csv" if (d / "xc.csv").exists() else None
        covs = load_covariates(Y.labels, dyadic=xd, row=xr, col=xc) \
            if (xd or xr or xc) else None
        slices.append((Y, covs))
    return assemble_longitudinal(slices)


def cmd_fit(args) -> int:
    spec = _spec_from_args(args)
    if spec.family in ("frn", "cbin") and spec.odmax is None:
        _warn("no --odmax given; defaulting to the maximum observed outdegree")
    if spec.symmetric and spec.nscan is not None and spec.nscan < 100000:
        _warn("symmetric factor terms mix slowly; consider nscan >= 100000")
    inputs = {"y": args.y, "xd": args.xd, "xr": args.xr, "xc": args.xc,
              "longitudinal": args.longitudinal}
    if args.longitudinal:
        data = _load_longitudinal(args.longitudinal)
        fit = fit_ame_rep(data, spec, chains=args.chains)
    else:
        if not args.y:
            raise ValueError("--y is required without --longitudinal")
        Y, covs = _load_static(args)
        fit = fit_ame(Y, covs, spec, chains=args.chains)
    out = Path(args.out)
    fit.save(out)
    spec_path = out / "spec.json"
    meta = json.loads(spec_path.read_text())
    meta["inputs"] = inputs
    meta["chains"] = args.chains
    spec_path.write_text(json.dumps(meta, indent=2))
    print(fit.summary())
    print(f"\nwrote {out}")
    return 0


def cmd_gof(args) -> int:
    Y = load_sociomatrix(args.y)
    stats = gofstats(Y.values)
    if np.all(stats == 0):
        _warn("constant sociomatrix: all statistics are zero")
    for name, val in zip(GOF_NAMES, stats):
        print(f"{name} {val:.8f}")
    if args.fit:
        fit = FitResult.load(args.fit)
        report = gof_compare(fit.GOF[1:], stats)
        out = Path(args.out or args.fit)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "gof_report.csv", "w") as f:
            f.write("statistic,observed,mean,lo95,hi95,tailprob\n")
            for r in report:
                f.write(f"{r['statistic']},{r['observed']!r},{r['mean']!r},"
                        f"{r['lo95']!r},{r['hi95']!r},{r['tailprob']!r}\n")
        with open(out / "gof_hist.csv", "w") as f:
            f.write("statistic,bin_lo,bin_hi,count\n")
            for r in report:
                for lo, hi, c in zip(r["hist_edges"][:-1], r["hist_edges"][1:],
                                     r["hist_counts"]):
                    f.write(f"{r['statistic']},{lo!r},{hi!r},{c}\n")
        print(f"wrote {out / 'gof_report.csv'}")
    elif args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "gofstats.csv", "w") as f:
            f.write("statistic,value\n")
            for name, val in zip(GOF_NAMES, stats):
                f.write(f"{name},{val!r}\n")
    return 0


def _state_mean(params: dict, n: int) -> np.ndarray:
    M = np.zeros((n, n))
    M += float(params.get("mu", params.get("beta0", 0.0)))
    if "M" in params:
        M = M + np.asarray(params["M"], dtype=float)
    a = np.asarray(params.get("a", np.zeros(n)), dtype=float)
    b = np.asarray(params.get("b", np.zeros(n)), dtype=float)
    M = M + a[:, None] + b[None, :]
    if "U" in params:
        U = np.asarray(params["U"], dtype=float)
        if "lam" in params:
            M = M + fx.multiplicative_mean(U, lam=np.asarray(params["lam"]))
        else:
            M = M + fx.multiplicative_mean(U, V=np.asarray(params["V"]))
    np.fill_diagonal(M, 0.0)
    return M


def cmd_simulate(args) -> int:
    params = json.loads(Path(args.params).read_text())
    family = args.model or params.get("family", "nrm")
    rng = np.random.default_rng(args.seed)
    if args.template:
        template = load_sociomatrix(args.template)
        labels, Yt = template.labels, template.values
        n = template.n
    else:
        if "n" not in params and "labels" not in params:
            raise ValueError("params file must give n or labels without --template")
        labels = params.get("labels")
        n = len(labels) if labels else int(params["n"])
        labels = tuple(labels) if labels else tuple(str(i + 1) for i in range(n))
        Yt = np.zeros((n, n))
        np.fill_diagonal(Yt, np.nan)
        if family in ("ord", "rrl"):
            raise ValueError("rank-matched families need --template for the "
                             "observed value distribution")
    if params.get("cov_ab") is not None and "a" not in params:
        cov = np.asarray(params["cov_ab"], dtype=float)
        ab = rng.multivariate_normal(np.zeros(2), cov, size=n)
        params = dict(params, a=ab[:, 0], b=ab[:, 1])
    M = _state_mean(params, n)
    odmax = _parse_odmax(args.odmax) if args.odmax is not None \
        else params.get("odmax")
    Ys = simulate_Y(rng, M, float(params.get("rho", 0.0)),
                    float(params.get("s2e", 1.0)), family, Yt,
                    odmax=odmax, symmetric=bool(params.get("symmetric", False)))
    write_sociomatrix(Sociomatrix(values=Ys, labels=labels), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_predict(args) -> int:
    fit = FitResult.load(args.fit)
    Y = load_sociomatrix(args.y)
    if Y.labels != fit.labels:
        raise ValueError("sociomatrix labels do not match the fitted model")
    ypm = fit.YPM if fit.YPM.ndim == 2 else fit.YPM[-1]
    miss = np.isnan(Y.values)
    np.fill_diagonal(miss, False)
    ii, jj = np.nonzero(miss)
    with open(args.out, "w") as f:
        f.write("i,j,row,col,prediction\n")
        for i, j in zip(ii, jj):
            f.write(f"{i},{j},{fit.labels[i]},{fit.labels[j]},{ypm[i, j]!r}\n")
    if ii.size == 0:
        _warn("no missing cells; predictions file is empty")
    print(f"wrote {args.out} ({ii.size} predictions)")
    if args.truth:
        truth = load_sociomatrix(args.truth)
        tv = truth.values[miss]
        pv = ypm[miss]
        keep = ~np.isnan(tv) & ~np.isnan(pv)
        if keep.any():
            mse = float(np.mean((pv[keep] - tv[keep]) ** 2))
            print(f"mse {mse:.4f} over {int(keep.sum())} cells")
    return 0


def cmd_covar(args) -> int:
    labels, names, table = load_nodal_table(args.nodal)
    if args.op == "product":
        xr = table[:, names.index(args.row or args.name)]
        xc = table[:, names.index(args.col or args.name)]
        M = nodal_product(xr, xc)
    elif args.op == "same":
        M = same_category(table[:, names.index(args.name)])
    else:
        raise ValueError(f"unknown covariate op {args.op!r}")
    np.fill_diagonal(M, np.nan)
    write_sociomatrix(Sociomatrix(values=M, labels=tuple(labels)), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_lag(args) -> int:
    data = _load_longitudinal(args.longitudinal)
    lagged = lag_dyadic(data, transpose=args.transpose)
    for t in range(lagged.shape[2]):
        path = f"{args.out_prefix}_t{t + 2}.csv"
        M = np.array(lagged[:, :, t])
        np.fill_diagonal(M, np.nan)
        write_sociomatrix(Sociomatrix(values=M, labels=data.labels), path)
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="amenet",
        description="additive and multiplicative effects models for dyadic data")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write a result directory")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gof", help="goodness-of-fit statistics and comparison")
    p.add_argument("--y", required=True)
    p.add_argument("--fit", help="fit directory for posterior predictive comparison")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("simulate", help="simulate a sociomatrix from parameters")
    p.add_argument("--params", required=True, help="JSON parameter file")
    p.add_argument("--model", choices=list(FAMILIES))
    p.add_argument("--template", help="sociomatrix supplying missingness and "
                                      "observed values for rank matching")
    p.add_argument("--odmax")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", help="export predictions for missing cells")
    p.add_argument("--fit", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--truth", help="complete sociomatrix for error reporting")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("covar", help="build dyadic covariates from nodal tables")
    p.add_argument("op", choices=["product", "same"])
    p.add_argument("--nodal", required=True)
    p.add_argument("--name", help="nodal variable (same/product)")
    p.add_argument("--row", help="row variable for product")
    p.add_argument("--col", help="column variable for product")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_covar)

    p = sub.add_parser("lag", help="write lagged dyadic covariates")
    p.add_argument("--longitudinal", required=True)
    p.add_argument("--transpose", action="store_true")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_lag)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime failures
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
