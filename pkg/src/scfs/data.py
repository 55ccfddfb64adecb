"""Dataset loading, preprocessing, synthetic benchmarks and report files."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolationError, InvalidInputError, ParseError, SchemaError
from .evaluation import EvalReport
from .numerics import SolverConfig, as_data_matrix

SCHEMA_VERSION = 1
PREPROCESS_MODES = ("shift-nonneg", "minmax", "none")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray | None = None
    name: str = ""
    feature_names: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = as_data_matrix(self.X)
        n, p = self.X.shape
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=int)
            if self.y.shape != (n,):
                raise InvalidInputError(f"y has shape {self.y.shape}, expected ({n},)")
        if self.feature_names is not None and len(self.feature_names) != p:
            raise InvalidInputError(f"{len(self.feature_names)} feature names for p={p}")
        self.meta = {**self.meta, "n": n, "p": p}
        if self.y is not None:
            self.meta["c"] = int(np.unique(self.y).size)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def c(self):
        return self.meta.get("c")


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, has_header=None, label_column=None, name=None) -> Dataset:
    """Read a rectangular numeric CSV.

    ``label_column`` (Python index, negatives allowed) names the column holding
    class labels; labels of any type are mapped to ``0..c-1`` in order of first
    appearance. ``has_header=None`` treats the first row as a header when any
    of its feature cells is non-numeric.
    """
    path = Path(path)
    if not path.is_file():
        raise ParseError("file not found", path=path)
    with path.open(newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("no data rows", path=path)

    width = len(rows[0][1])
    lab = None
    if label_column is not None:
        lab = label_column + width if label_column < 0 else label_column
        if not 0 <= lab < width:
            raise ParseError(f"label column {label_column} outside {width} columns", path=path)
    feat_cols = [j for j in range(width) if j != lab]

    header = None
    if has_header is None:
        has_header = not all(_is_number(rows[0][1][j]) for j in feat_cols)
    if has_header:
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if len(rows) < 2:
        raise ParseError("need at least two data rows", path=path)

    values = np.empty((len(rows), len(feat_cols)))
    raw_labels = []
    for r, (lineno, cells) in enumerate(rows):
        if len(cells) != width:
            raise ParseError(f"expected {width} fields, found {len(cells)}", path=path, row=lineno)
        for c, j in enumerate(feat_cols):
            try:
                values[r, c] = float(cells[j])
            except ValueError:
                raise ParseError(f"non-numeric value {cells[j]!r}", path=path, row=lineno, column=j + 1) from None
        if lab is not None:
            raw_labels.append(cells[lab].strip())
    if not np.all(np.isfinite(values)):
        r, c = np.argwhere(~np.isfinite(values))[0]
        raise ParseError("non-finite value", path=path, row=rows[r][0], column=feat_cols[c] + 1)

    y = None
    meta = {}
    if lab is not None:
        ids = {}
        y = np.array([ids.setdefault(v, len(ids)) for v in raw_labels], dtype=int)
        meta["label_names"] = list(ids)
    names = [header[j] for j in feat_cols] if header else None
    return Dataset(X=values, y=y, name=name or path.stem, feature_names=names, meta=meta)


def preprocess(X, mode="shift-nonneg"):
    """Bring ``X`` into the nonnegative range the multiplicative update needs.

    ``shift-nonneg`` subtracts each negative column minimum, ``minmax``
    rescales every column to [0, 1] (constant columns become 0) and ``none``
    only checks that ``X`` is already nonnegative.
    """
    X = as_data_matrix(X)
    if mode == "shift-nonneg":
        lo = X.min(axis=0)
        out = X - np.minimum(lo, 0.0)[None, :]
        # x - min can round below zero only at the minimum itself
        return np.maximum(out, 0.0)
    if mode == "minmax":
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = hi - lo
        out = np.zeros_like(X)
        ok = span > 0
        out[:, ok] = (X[:, ok] - lo[ok]) / span[ok]
        return np.clip(out, 0.0, 1.0)
    if mode == "none":
        if X.min() < 0:
            raise ContractViolationError("data contains negative entries and preprocessing is 'none'")
        return X.copy()
    raise InvalidInputError(f"unknown preprocessing mode {mode!r}; choose from {PREPROCESS_MODES}")


def generate_planted(n, p_informative, p_noise, c, separation, seed=0) -> Dataset:
    """Gaussian clusters living in a known subset of columns.

    Each informative coordinate places the ``c`` cluster centers on the levels
    ``0, separation, ..., (c-1) separation`` in a random order; samples add unit
    Gaussian noise. Noise columns are pure unit Gaussian. Columns are shuffled,
    the informative positions are stored in ``meta["informative"]``, and the
    result is shifted nonnegative.
    """
    if c < 2 or n < 2 * c:
        raise InvalidInputError(f"need c >= 2 and n >= 2c, got n={n}, c={c}")
    if p_informative < 1 or p_noise < 0:
        raise InvalidInputError("need p_informative >= 1 and p_noise >= 0")
    if not (np.isfinite(separation) and separation >= 0):
        raise InvalidInputError(f"separation must be finite and nonnegative, got {separation}")
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % c
    rng.shuffle(labels)
    levels = np.stack([rng.permutation(c) for _ in range(p_informative)], axis=1)
    centers = separation * levels.astype(float)
    informative = centers[labels] + rng.standard_normal((n, p_informative))
    noise = rng.standard_normal((n, p_noise))
    X = np.hstack([informative, noise])
    perm = rng.permutation(p_informative + p_noise)
    X = X[:, perm]
    inf_idx = np.sort(np.flatnonzero(perm < p_informative))
    X = preprocess(X, "shift-nonneg")
    meta = {
        "informative": inf_idx.tolist(),
        "separation": float(separation),
        "seed": int(seed),
    }
    return Dataset(X=X, y=labels, name="planted", meta=meta)


def write_dataset_csv(ds: Dataset, path):
    """Write features plus a trailing ``label`` column (when present) with a header."""
    names = ds.feature_names or [f"f{j}" for j in range(ds.p)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + (["label"] if ds.y is not None else []))
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.X[i]]
            if ds.y is not None:
                row.append(str(int(ds.y[i])))
            w.writerow(row)


@dataclass
class GridCell:
    """One (alpha, beta) grid point and its evaluation at every feature count."""

    alpha: float
    beta: float
    alpha_index: int
    beta_index: int
    config: SolverConfig
    iterations: int
    converged: bool
    objective_trace: list
    penalized_trace: list
    ranking: list
    evaluations: dict  # k -> {"features": [...], "report": EvalReport}
    fit_seconds: float | None = None

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "alpha_index": self.alpha_index,
            "beta_index": self.beta_index,
            "config": self.config.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_trace": list(self.objective_trace),
            "penalized_trace": list(self.penalized_trace),
            "ranking": [int(i) for i in self.ranking],
            "evaluations": [
                {"k": int(k), "features": v["features"], "report": v["report"].to_dict()}
                for k, v in sorted(self.evaluations.items())
            ],
            "fit_seconds": self.fit_seconds,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            alpha=d["alpha"],
            beta=d["beta"],
            alpha_index=d["alpha_index"],
            beta_index=d["beta_index"],
            config=SolverConfig.from_dict(d["config"]),
            iterations=d["iterations"],
            converged=d["converged"],
            objective_trace=list(d["objective_trace"]),
            penalized_trace=list(d["penalized_trace"]),
            ranking=list(d["ranking"]),
            evaluations={
                e["k"]: {"features": list(e["features"]), "report": EvalReport.from_dict(e["report"])}
                for e in d["evaluations"]
            },
            fit_seconds=d.get("fit_seconds"),
        )


@dataclass
class ExperimentReport:
    dataset: dict
    settings: dict
    feature_counts: list
    cells: list = field(default_factory=list)
    best: list = field(default_factory=list)
    timings: dict | None = None
    error: str | None = None

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset": self.dataset,
            "settings": self.settings,
            "feature_counts": list(self.feature_counts),
            "cells": [c.to_dict() for c in self.cells],
            "best": self.best,
            "timings": self.timings,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SchemaError("report must be a JSON object")
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema_version {version!r}")
        missing = {"dataset", "settings", "feature_counts", "cells", "best"} - d.keys()
        if missing:
            raise SchemaError(f"report lacks fields: {sorted(missing)}")
        try:
            cells = [GridCell.from_dict(c) for c in d["cells"]]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed grid cell: {exc}") from exc
        return cls(
            dataset=d["dataset"],
            settings=d["settings"],
            feature_counts=list(d["feature_counts"]),
            cells=cells,
            best=d["best"],
            timings=d.get("timings"),
            error=d.get("error"),
        )


def write_report(report: ExperimentReport, path):
    path = Path(path)
    path.write_text(json.dumps(report.to_dict(), indent=1, allow_nan=False) + "\n")


def read_report(path) -> ExperimentReport:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return ExperimentReport.from_dict(d)


def write_trace_csv(trace, path):
    """Write ``iteration,objective`` rows, iterations counted from 1."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective"])
        for t, v in enumerate(trace, start=1):
            w.writerow([t, repr(float(v))])


def read_trace_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["iteration", "objective"]:
        raise SchemaError(f"{path}: expected header 'iteration,objective'")
    return [float(v) for _, v in rows[1:]]
