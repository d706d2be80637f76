"""Export the bundled example datasets from the upstream amen R package.

The repository ships six dyadic datasets (ir90s, lazegalaw, sheep,
sampsonmonks, dutchcollege, coldwar) as plain CSV under data/.  This script
regenerates those files from the amen R source tarball (CRAN), so the data
provenance is reproducible.  It is a maintenance tool, not part of the
installed package, and needs the pure-python `rdata` reader:

    pip install rdata
    python scripts/export_datasets.py --tarball amen_1.4.5.tar.gz --out data/

Values are written raw (no log/centering transforms); analysis-specific
transformations live in `amenet.datasets`.
"""

import argparse
import json
import tarfile
import tempfile
from pathlib import Path

import numpy as np

AMEN_VERSION = "1.4.5"


def fmt(x):
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return "NA"
    if isinstance(x, float) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_square(path, labels, M):
    with open(path, "w") as f:
        f.write("," + ",".join(labels) + "\n")
        for lab, row in zip(labels, M):
            f.write(lab + "," + ",".join(fmt(v) for v in row) + "\n")


def write_table(path, labels, colnames, M):
    with open(path, "w") as f:
        f.write("," + ",".join(colnames) + "\n")
        for lab, row in zip(labels, np.atleast_2d(M.T).T):
            f.write(lab + "," + ",".join(fmt(v) for v in row) + "\n")


def get_labels(xr_obj, axis=0, n=None):
    try:
        vals = [str(v) for v in xr_obj.coords[xr_obj.dims[axis]].values]
        if vals and not all(v.isdigit() for v in vals):
            return vals
    except Exception:
        pass
    # unlabeled in the upstream source: use 1-based indices
    return [str(i + 1) for i in range(n)]


def main():
    import rdata

    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tarball", required=True, help="amen R source tarball")
    ap.add_argument("--out", default="data", help="output directory")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "source": f"amen R package {AMEN_VERSION} (CRAN) bundled data, exported to CSV",
        "note": "values are raw/untransformed; missing cells and the undefined "
                "diagonal are written as NA; analysis transforms are applied in "
                "amenet.datasets",
        "datasets": {},
    }

    with tempfile.TemporaryDirectory() as tmp:
        with tarfile.open(args.tarball) as tf:
            members = [m for m in tf.getmembers() if m.name.startswith("amen/data/")]
            tf.extractall(tmp, members=members)
        rd = Path(tmp) / "amen" / "data"

        def load(name):
            parsed = rdata.parser.parse_file(rd / f"{name}.RData")
            return rdata.conversion.convert(parsed)[name]

        # --- ir90s: international relations in the 1990s
        ir = load("IR90s")
        dv, nv = ir["dyadvars"], ir["nodevars"]
        labels = get_labels(nv, 0, nv.shape[0])
        d = out / "ir90s"
        d.mkdir(exist_ok=True)
        dyad_names = [str(v) for v in dv.coords[dv.dims[2]].values]
        files = {}
        for k, nm in enumerate(dyad_names):
            write_square(d / f"dyad_{nm}.csv", labels, dv.values[:, :, k])
            files[f"dyad_{nm}"] = f"ir90s/dyad_{nm}.csv"
        node_names = [str(v) for v in nv.coords[nv.dims[1]].values]
        write_table(d / "nodevars.csv", labels, node_names, nv.values)
        files["nodevars"] = "ir90s/nodevars.csv"
        manifest["datasets"]["ir90s"] = {
            "n": len(labels), "files": files,
            "dyadic": dyad_names, "nodal": node_names,
            "description": "country dyads: conflicts, exports, distance, "
                           "shared IGO memberships, polity interaction; "
                           "nodal population, GDP, polity",
        }

        # --- lazegalaw: law firm networks
        lz = load("lazegalaw")
        n = lz["Y"].shape[0]
        labels = get_labels(lz["Y"], 0, n)
        d = out / "lazegalaw"
        d.mkdir(exist_ok=True)
        files = {}
        rel_names = [str(v) for v in lz["Y"].coords[lz["Y"].dims[2]].values]
        for k, nm in enumerate(rel_names):
            write_square(d / f"y_{nm}.csv", labels, lz["Y"].values[:, :, k])
            files[f"y_{nm}"] = f"lazegalaw/y_{nm}.csv"
        node_names = [str(v) for v in lz["X"].coords[lz["X"].dims[1]].values]
        write_table(d / "nodevars.csv", labels, node_names, lz["X"].values)
        files["nodevars"] = "lazegalaw/nodevars.csv"
        manifest["datasets"]["lazegalaw"] = {
            "n": n, "files": files, "relations": rel_names, "nodal": node_names,
            "description": "binary advice/friendship/cowork networks between "
                           "71 members of a law firm, with nodal attributes",
        }

        # --- sheep: dominance encounters
        sh = load("sheep")
        n = sh["dom"].shape[0]
        labels = get_labels(sh["dom"], 0, n)
        d = out / "sheep"
        d.mkdir(exist_ok=True)
        write_square(d / "dom.csv", labels, sh["dom"].values)
        write_table(d / "nodevars.csv", labels, ["age"], np.asarray(sh["age"], float))
        manifest["datasets"]["sheep"] = {
            "n": n,
            "files": {"dom": "sheep/dom.csv", "nodevars": "sheep/nodevars.csv"},
            "nodal": ["age"],
            "description": "counts of dominance encounters between 28 female "
                           "bighorn sheep, with ages",
        }

        # --- sampsonmonks: relational rankings between monks
        sm = load("sampsonmonks")
        n = sm.shape[0]
        labels = get_labels(sm, 0, n)
        d = out / "sampsonmonks"
        d.mkdir(exist_ok=True)
        files = {}
        rel_names = [str(v) for v in sm.coords[sm.dims[2]].values]
        for k, nm in enumerate(rel_names):
            write_square(d / f"y_{nm}.csv", labels, sm.values[:, :, k])
            files[f"y_{nm}"] = f"sampsonmonks/y_{nm}.csv"
        manifest["datasets"]["sampsonmonks"] = {
            "n": n, "files": files, "relations": rel_names,
            "description": "top-three rankings of 18 monks on ten relations "
                           "(like at three waves, esteem, influence, praise, ...)",
        }

        # --- dutchcollege: longitudinal friendship ratings
        dc = load("dutchcollege")
        Y = np.asarray(dc["Y"], float)
        n, _, T = Y.shape
        labels = [str(i + 1) for i in range(n)]
        d = out / "dutchcollege"
        d.mkdir(exist_ok=True)
        files = {}
        for t in range(T):
            write_square(d / f"y_t{t + 1}.csv", labels, Y[:, :, t])
            files[f"y_t{t + 1}"] = f"dutchcollege/y_t{t + 1}.csv"
        node_names = [str(v) for v in dc["X"].coords[dc["X"].dims[1]].values]
        write_table(d / "nodevars.csv", labels, node_names, dc["X"].values)
        files["nodevars"] = "dutchcollege/nodevars.csv"
        manifest["datasets"]["dutchcollege"] = {
            "n": n, "T": T, "files": files, "nodal": node_names,
            "description": "relationship ratings (-1..4) among 32 students at "
                           "seven time points; nodal male/smoker/program",
        }

        # --- coldwar: cooperation/conflict counts every five years
        cw = load("coldwar")
        cc = cw["cc"]
        n = cc.shape[0]
        labels = get_labels(cc, 0, n)
        years = [str(v) for v in cc.coords[cc.dims[2]].values]
        d = out / "coldwar"
        d.mkdir(exist_ok=True)
        files = {}
        for k, yr in enumerate(years):
            write_square(d / f"cc_{yr}.csv", labels, cc.values[:, :, k])
            files[f"cc_{yr}"] = f"coldwar/cc_{yr}.csv"
        write_square(d / "distance.csv", labels, cw["distance"].values)
        files["distance"] = "coldwar/distance.csv"
        write_table(d / "gdp.csv", labels, years, cw["gdp"].values)
        write_table(d / "polity.csv", labels, years, cw["polity"].values)
        files["gdp"] = "coldwar/gdp.csv"
        files["polity"] = "coldwar/polity.csv"
        manifest["datasets"]["coldwar"] = {
            "n": n, "years": years, "files": files,
            "description": "cooperation/conflict counts between 66 countries "
                           "1950-1985, with distances and per-year GDP/polity",
        }

    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
    print(f"wrote {out}/manifest.json and dataset directories")


if __name__ == "__main__":
    main()
