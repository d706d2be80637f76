"""Data model and ingestion for sociomatrices and covariate arrays.

A sociomatrix is a square matrix of dyadic outcomes with an undefined
diagonal.  Missing cells are represented by NaN, as is the diagonal.  All
container types are immutable after construction so they can be shared
freely across threads and chains.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Sociomatrix",
    "CovariateSet",
    "LongitudinalData",
    "load_sociomatrix",
    "write_sociomatrix",
    "load_nodal_table",
    "load_dyadic_covariates",
    "load_covariates",
    "assemble_longitudinal",
    "egocentric_sample",
]


def _freeze(arr):
    arr = np.asarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Sociomatrix:
    """n x n dyadic outcome matrix; NaN marks missing cells and the diagonal."""

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"sociomatrix must be square, got shape {values.shape}")
        n = values.shape[0]
        labels = tuple(str(l) for l in self.labels) if self.labels else tuple(
            str(i + 1) for i in range(n))
        if len(labels) != n:
            raise ValueError(f"{len(labels)} labels for {n} nodes")
        if len(set(labels)) != n:
            raise ValueError("duplicate node labels")
        np.fill_diagonal(values, np.nan)
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def observed(self) -> np.ndarray:
        """Boolean mask of defined (off-diagonal, non-missing) cells."""
        return ~np.isnan(self.values)

    def n_observed(self) -> int:
        return int(self.observed.sum())

    def is_symmetric(self) -> bool:
        """True when values agree with their transpose wherever both observed."""
        v, vt = self.values, self.values.T
        both = ~np.isnan(v) & ~np.isnan(vt)
        return bool(np.all(v[both] == vt[both]))


@dataclass(frozen=True)
class CovariateSet:
    """Dyadic (n,n,p_d), row-nodal (n,p_r) and column-nodal (n,p_c) covariates."""

    Xd: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0)))
    Xr: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    Xc: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    dyad_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()
    col_names: tuple[str, ...] = ()

    def __post_init__(self):
        Xd = np.array(self.Xd, dtype=float)
        Xr = np.atleast_2d(np.array(self.Xr, dtype=float))
        Xc = np.atleast_2d(np.array(self.Xc, dtype=float))
        if Xd.ndim == 2:
            Xd = Xd[:, :, None]
        if Xd.ndim != 3 or Xd.shape[0] != Xd.shape[1]:
            raise ValueError(f"dyadic covariates must be (n, n, p_d), got {Xd.shape}")
        n = self._infer_n(Xd, Xr, Xc)
        if Xr.size == 0:
            Xr = np.zeros((n, 0))
        if Xc.size == 0:
            Xc = np.zeros((n, 0))
        for name, arr, rows in (("row", Xr, Xr.shape[0]), ("column", Xc, Xc.shape[0])):
            if arr.shape[1] > 0 and rows != n:
                raise ValueError(
                    f"{name}-nodal covariates have {rows} rows for {n} nodes")
        if Xd.shape[2] > 0:
            # the diagonal of a dyadic covariate is unused; normalize it to 0
            idx = np.arange(n)
            Xd[idx, idx, :] = 0.0
            if np.isnan(Xd).any():
                raise ValueError("missing values in dyadic covariates")
        if np.isnan(Xr).any() or np.isnan(Xc).any():
            raise ValueError("missing values in nodal covariates")
        object.__setattr__(self, "Xd", _freeze(Xd))
        object.__setattr__(self, "Xr", _freeze(Xr))
        object.__setattr__(self, "Xc", _freeze(Xc))
        object.__setattr__(self, "dyad_names", self._names(self.dyad_names, Xd.shape[2]))
        object.__setattr__(self, "row_names", self._names(self.row_names, Xr.shape[1]))
        object.__setattr__(self, "col_names", self._names(self.col_names, Xc.shape[1]))

    @staticmethod
    def _infer_n(Xd, Xr, Xc):
        for arr in (Xd, Xr, Xc):
            if arr.shape[0] > 0 and arr.size > 0:
                return arr.shape[0]
        return 0

    @staticmethod
    def _names(names, p):
        names = tuple(str(s) for s in names)
        if not names and p == 1:
            return ("",)
        if not names:
            return tuple(f"x{k + 1}" for k in range(p))
        if len(names) != p:
            raise ValueError(f"{len(names)} names for {p} covariates")
        return names

    @classmethod
    def empty(cls, n: int) -> "CovariateSet":
        return cls(Xd=np.zeros((n, n, 0)), Xr=np.zeros((n, 0)), Xc=np.zeros((n, 0)))

    @property
    def n(self) -> int:
        return self._infer_n(self.Xd, self.Xr, self.Xc)

    def check_n(self, n: int):
        own = self.n
        if own and own != n:
            raise ValueError(f"covariates are for {own} nodes, sociomatrix has {n}")


@dataclass(frozen=True)
class LongitudinalData:
    """T sociomatrix slices on an identical nodeset, with per-slice covariates.

    Dyadic covariates are (n, n, p_d, T); nodal covariates are (n, p, T).
    """

    Y: tuple[Sociomatrix, ...]
    Xd: np.ndarray
    Xr: np.ndarray
    Xc: np.ndarray
    dyad_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()
    col_names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.Y) < 1:
            raise ValueError("need at least one time slice")
        labels = self.Y[0].labels
        for t, sm in enumerate(self.Y):
            if sm.labels != labels:
                raise ValueError(f"nodeset of slice {t} differs from slice 0")
        n, T = self.Y[0].n, len(self.Y)
        Xd = np.array(self.Xd, dtype=float)
        Xr = np.array(self.Xr, dtype=float)
        Xc = np.array(self.Xc, dtype=float)
        if Xd.size == 0:
            Xd = np.zeros((n, n, 0, T))
        if Xr.size == 0:
            Xr = np.zeros((n, 0, T))
        if Xc.size == 0:
            Xc = np.zeros((n, 0, T))
        if Xd.shape[:2] != (n, n) or Xd.shape[3] != T:
            raise ValueError(f"dyadic covariates must be (n, n, p_d, T), got {Xd.shape}")
        if Xr.shape[0] != n or Xr.shape[2] != T or Xc.shape[0] != n or Xc.shape[2] != T:
            raise ValueError("nodal covariates must be (n, p, T)")
        idx = np.arange(n)
        Xd[idx, idx, :, :] = 0.0
        object.__setattr__(self, "Y", tuple(self.Y))
        object.__setattr__(self, "Xd", _freeze(Xd))
        object.__setattr__(self, "Xr", _freeze(Xr))
        object.__setattr__(self, "Xc", _freeze(Xc))
        object.__setattr__(self, "dyad_names",
                           CovariateSet._names(self.dyad_names, Xd.shape[2]))
        object.__setattr__(self, "row_names",
                           CovariateSet._names(self.row_names, Xr.shape[1]))
        object.__setattr__(self, "col_names",
                           CovariateSet._names(self.col_names, Xc.shape[1]))

    @property
    def n(self) -> int:
        return self.Y[0].n

    @property
    def T(self) -> int:
        return len(self.Y)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.Y[0].labels

    def covariates_at(self, t: int) -> CovariateSet:
        return CovariateSet(Xd=self.Xd[:, :, :, t], Xr=self.Xr[:, :, t],
                            Xc=self.Xc[:, :, t], dyad_names=self.dyad_names,
                            row_names=self.row_names, col_names=self.col_names)


# ---------------------------------------------------------------------------
# file ingestion

_MISSING = {"", "NA", "NaN", "nan", "null"}


def _parse_cell(token: str, where: str) -> float:
    token = token.strip()
    if token in _MISSING:
        return np.nan
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"unparseable cell {token!r} at {where}") from None


def _open_source(source, mode="r"):
    if hasattr(source, "read"):
        return source, False
    return open(os.fspath(source), mode), True


def _read_text(source) -> str:
    fh, close = _open_source(source)
    try:
        data = fh.read()
        return data.decode() if isinstance(data, bytes) else data
    finally:
        if close:
            fh.close()


def _detect_format(source, fmt):
    if fmt is not None:
        return fmt
    name = getattr(source, "name", None) or (source if isinstance(source, (str, os.PathLike)) else "")
    return "json" if str(name).endswith(".json") else "csv"


def load_sociomatrix(source, fmt: str | None = None) -> Sociomatrix:
    """Read a labeled square matrix from CSV or JSON.

    CSV layout: header row and first column carry the node labels; "NA" or an
    empty cell marks a missing value.  Row labels must equal the column labels
    in order.  The diagonal is forced undefined regardless of file content.
    """
    fmt = _detect_format(source, fmt)
    text = _read_text(source)
    if fmt == "json":
        obj = json.loads(text)
        labels = [str(l) for l in obj["labels"]]
        values = np.array([[np.nan if v is None else float(v) for v in row]
                           for row in obj["values"]], dtype=float)
        if values.shape != (len(labels), len(labels)):
            raise ValueError("json sociomatrix is not square")
        return Sociomatrix(values=values, labels=tuple(labels))
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise ValueError("empty sociomatrix file")
    col_labels = [c.strip() for c in rows[0][1:]]
    n = len(col_labels)
    if len(rows) - 1 != n:
        raise ValueError(f"non-square input: {len(rows) - 1} rows, {n} columns")
    row_labels, values = [], np.empty((n, n))
    for i, row in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise ValueError(f"row {i} has {len(row) - 1} cells, expected {n}")
        row_labels.append(row[0].strip())
        for j, tok in enumerate(row[1:]):
            values[i, j] = _parse_cell(tok, f"row {row_labels[-1]!r}, col {col_labels[j]!r}")
    if row_labels != col_labels:
        raise ValueError("row labels do not equal column labels in order")
    if len(set(row_labels)) != n:
        raise ValueError("duplicate labels")
    return Sociomatrix(values=values, labels=tuple(row_labels))


def _fmt_value(x: float) -> str:
    if np.isnan(x):
        return "NA"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_sociomatrix(sm: Sociomatrix, dest, fmt: str | None = None) -> None:
    """Write a sociomatrix as labeled CSV or JSON (inverse of load_sociomatrix)."""
    fmt = _detect_format(dest, fmt)
    if fmt == "json":
        obj = {"labels": list(sm.labels),
               "values": [[None if np.isnan(v) else v for v in row]
                          for row in sm.values]}
        payload = json.dumps(obj)
    elif fmt == "csv":
        lines = ["," + ",".join(sm.labels)]
        for lab, row in zip(sm.labels, sm.values):
            lines.append(lab + "," + ",".join(_fmt_value(v) for v in row))
        payload = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    fh, close = _open_source(dest, "w")
    try:
        fh.write(payload)
    finally:
        if close:
            fh.close()


def load_nodal_table(source, fmt: str | None = None):
    """Read a labeled nodal covariate table.

    CSV layout: header of variable names (first cell empty), one labeled row
    per node.  Returns (labels, names, values) with values of shape (n, p).
    """
    fmt = _detect_format(source, fmt)
    text = _read_text(source)
    if fmt == "json":
        obj = json.loads(text)
        values = np.array(obj["values"], dtype=float)
        return ([str(l) for l in obj["labels"]], [str(s) for s in obj["names"]],
                np.atleast_2d(values))
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    names = [c.strip() for c in rows[0][1:]]
    labels, values = [], []
    for row in rows[1:]:
        labels.append(row[0].strip())
        values.append([_parse_cell(tok, f"row {row[0]!r}") for tok in row[1:]])
    values = np.array(values, dtype=float)
    if np.isnan(values).any():
        raise ValueError("missing values in nodal covariates")
    return labels, names, values


def load_dyadic_covariates(sources, labels=None, fmt: str | None = None):
    """Read dyadic covariate slices.

    Each source is either a labeled square matrix file (slice name taken from
    the file stem) or a long-form CSV with header i,j,name,value.  Returns
    (names, X) with X of shape (n, n, p_d).
    """
    if isinstance(sources, (str, os.PathLike)) or hasattr(sources, "read"):
        sources = [sources]
    names, slices = [], []
    for src in sources:
        text = _read_text(src)
        first = text.splitlines()[0] if text else ""
        header = [c.strip().lower() for c in first.split(",")]
        if header[:4] == ["i", "j", "name", "value"]:
            lab_index = {l: k for k, l in enumerate(labels)} if labels else None
            per_name: dict[str, dict] = {}
            for row in csv.reader(io.StringIO(text)):
                if not row or row[0].strip().lower() == "i":
                    continue
                i, j, nm, val = row[0].strip(), row[1].strip(), row[2].strip(), row[3]
                per_name.setdefault(nm, {})[(i, j)] = _parse_cell(val, f"({i},{j})")
            if lab_index is None:
                raise ValueError("long-form dyadic covariates need node labels")
            n = len(lab_index)
            for nm, cells in per_name.items():
                M = np.zeros((n, n))
                for (i, j), v in cells.items():
                    M[lab_index[i], lab_index[j]] = v
                names.append(nm)
                slices.append(M)
        else:
            sm = load_sociomatrix(io.StringIO(text), fmt="csv")
            if labels and tuple(labels) != sm.labels:
                raise ValueError("dyadic covariate labels do not match sociomatrix")
            stem = os.path.splitext(os.path.basename(os.fspath(src)))[0] \
                if isinstance(src, (str, os.PathLike)) else f"x{len(names) + 1}"
            names.append(stem)
            M = np.array(sm.values)
            np.fill_diagonal(M, 0.0)
            slices.append(M)
    X = np.stack(slices, axis=2) if slices else np.zeros((0, 0, 0))
    return names, X


def load_covariates(labels, dyadic=None, row=None, col=None) -> CovariateSet:
    """Assemble a validated CovariateSet from covariate files.

    labels: node labels of the matching sociomatrix (fixes n and ordering).
    dyadic: square-matrix or long-form file(s); row/col: nodal table files.
    """
    n = len(labels)
    Xd = np.zeros((n, n, 0))
    dyad_names: list[str] = []
    if dyadic is not None:
        dyad_names, Xd = load_dyadic_covariates(dyadic, labels=labels)
        if Xd.shape[2] and Xd.shape[0] != n:
            raise ValueError(f"dyadic covariates are {Xd.shape[0]}x{Xd.shape[1]}, "
                             f"sociomatrix has {n} nodes")
    def _nodal(which, src):
        if src is None:
            return [], np.zeros((n, 0))
        labs, names, vals = load_nodal_table(src)
        if len(labs) != n:
            raise ValueError(f"{which}-nodal covariates have {len(labs)} rows "
                             f"for {n} nodes")
        if labs != [str(l) for l in labels]:
            raise ValueError(f"{which}-nodal covariate labels do not match")
        return names, vals
    row_names, Xr = _nodal("row", row)
    col_names, Xc = _nodal("column", col)
    return CovariateSet(Xd=Xd, Xr=Xr, Xc=Xc, dyad_names=tuple(dyad_names),
                        row_names=tuple(row_names), col_names=tuple(col_names))


def assemble_longitudinal(slices) -> LongitudinalData:
    """Stack (Sociomatrix, CovariateSet) pairs into longitudinal data.

    The time axis is ordered as given; per-slice missingness is preserved.
    All slices must share the nodeset and covariate names.
    """
    if not slices:
        raise ValueError("no time slices given")
    pairs = [(sm, cs if cs is not None else CovariateSet.empty(sm.n))
             for sm, cs in slices]
    sm0, cs0 = pairs[0]
    for t, (sm, cs) in enumerate(pairs):
        if sm.labels != sm0.labels:
            raise ValueError(f"nodeset mismatch at slice {t}")
        if (cs.dyad_names, cs.row_names, cs.col_names) != \
                (cs0.dyad_names, cs0.row_names, cs0.col_names):
            raise ValueError(f"covariate names mismatch at slice {t}")
    Xd = np.stack([cs.Xd for _, cs in pairs], axis=3)
    Xr = np.stack([cs.Xr for _, cs in pairs], axis=2)
    Xc = np.stack([cs.Xc for _, cs in pairs], axis=2)
    return LongitudinalData(Y=tuple(sm for sm, _ in pairs), Xd=Xd, Xr=Xr, Xc=Xc,
                            dyad_names=cs0.dyad_names, row_names=cs0.row_names,
                            col_names=cs0.col_names)


def egocentric_sample(sm: Sociomatrix, n_egos: int, rng) -> tuple[Sociomatrix, np.ndarray]:
    """Mask a sociomatrix down to an egocentric sample.

    Randomly picks n_egos nodes; their outgoing rows are observed, and for
    every pair of alters a given ego links to, the cells between those alters
    are observed.  Everything else becomes missing.  Returns the masked
    sociomatrix and the sorted ego indices.
    """
    n = sm.n
    egos = np.sort(rng.choice(n, size=n_egos, replace=False))
    masked = np.full((n, n), np.nan)
    masked[egos, :] = sm.values[egos, :]
    for i in egos:
        alters = np.where(masked[i, :] == 1)[0]
        masked[np.ix_(alters, alters)] = sm.values[np.ix_(alters, alters)]
    return Sociomatrix(values=masked, labels=sm.labels), egos
