"""Synthetic generators, CSV ingestion and resampling helpers.

All randomness goes through PCG64 generators seeded from
``numpy.random.SeedSequence`` so every draw is reproducible and independent
sub-streams can be spawned per repetition.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, InsufficientSampleError, ParseError, SchemaError
from .testing import make_rng

GAUSSIAN_SHIFT = "gaussian"
LOGNORMAL_SHIFT = "lognormal"

HEART_FAILURE_COLUMNS = [
    "age",
    "anaemia",
    "creatinine_phosphokinase",
    "diabetes",
    "ejection_fraction",
    "high_blood_pressure",
    "platelets",
    "serum_creatinine",
    "serum_sodium",
    "sex",
    "smoking",
    "time",
]
HEART_FAILURE_LABEL = "DEATH_EVENT"
HEART_FAILURE_PAIR = ["ejection_fraction", "serum_creatinine"]

_BC_BASE = [
    "radius",
    "texture",
    "perimeter",
    "area",
    "smoothness",
    "compactness",
    "concavity",
    "concave points",
    "symmetry",
    "fractal_dimension",
]
BREAST_CANCER_COLUMNS = [f"{b}_{s}" for s in ("mean", "se", "worst") for b in _BC_BASE]
BREAST_CANCER_LABEL = "diagnosis"
BREAST_CANCER_PAIR = ["concavity_mean", "concave points_mean"]


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None = None
    name: str = "data"
    columns: tuple[str, ...] = ()
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        feats = np.array(self.features, dtype=float)
        if feats.ndim == 1:
            feats = feats[:, None]
        if feats.ndim != 2 or feats.shape[1] < 1:
            raise DataError(f"dataset {self.name!r}: features must be an M x D matrix")
        if not np.all(np.isfinite(feats)):
            raise DataError(f"dataset {self.name!r} contains non-finite feature values")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=object)
            if labels.shape != (feats.shape[0],):
                raise DataError(f"dataset {self.name!r}: {labels.size} labels for {feats.shape[0]} rows")
            object.__setattr__(self, "labels", labels)
        cols = tuple(self.columns) or tuple(f"x{j + 1}" for j in range(feats.shape[1]))
        if len(cols) != feats.shape[1]:
            raise DataError(f"dataset {self.name!r}: {len(cols)} column names for {feats.shape[1]} columns")
        object.__setattr__(self, "columns", cols)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dims(self) -> int:
        return self.features.shape[1]

    def take(self, rows, name: str | None = None) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        labels = None if self.labels is None else self.labels[rows]
        return Dataset(self.features[rows], labels, name or self.name, self.columns)


@dataclass(frozen=True)
class GeneratorSpec:
    family: str = GAUSSIAN_SHIFT
    dims: int = 2
    shift: float = 0.5
    size: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.family not in (GAUSSIAN_SHIFT, LOGNORMAL_SHIFT):
            raise ConfigError(f"unknown generator family {self.family!r}")
        if self.dims < 1:
            raise ConfigError("generator dims must be >= 1")
        if self.size < 2:
            raise ConfigError("generator size must be >= 2")
        if not math.isfinite(self.shift):
            raise ConfigError("generator shift must be finite")

    def to_dict(self) -> dict:
        return {"family": self.family, "dims": self.dims, "shift": self.shift, "size": self.size, "seed": self.seed}


def _normal_pair(spec: GeneratorSpec) -> tuple[np.ndarray, np.ndarray]:
    sx, sy = np.random.SeedSequence(spec.seed).spawn(2)
    gx = make_rng(sx).standard_normal((spec.size, spec.dims))
    gy = spec.shift + make_rng(sy).standard_normal((spec.size, spec.dims))
    return gx, gy


def gen_gaussian_shift(spec: GeneratorSpec) -> tuple[Dataset, Dataset]:
    """X ~ N(0, I), Y ~ N(d 1, I), ``size`` rows each."""
    if spec.family != GAUSSIAN_SHIFT:
        raise ConfigError(f"expected a {GAUSSIAN_SHIFT} generator, got {spec.family!r}")
    gx, gy = _normal_pair(spec)
    return Dataset(gx, name="X"), Dataset(gy, name="Y")


def gen_lognormal_shift(spec: GeneratorSpec) -> tuple[Dataset, Dataset]:
    """Coordinates exp(N(0, 1)) for X and exp(N(d, 1)) for Y."""
    if spec.family != LOGNORMAL_SHIFT:
        raise ConfigError(f"expected a {LOGNORMAL_SHIFT} generator, got {spec.family!r}")
    gx, gy = _normal_pair(spec)
    return Dataset(np.exp(gx), name="X"), Dataset(np.exp(gy), name="Y")


def generate(spec: GeneratorSpec) -> tuple[Dataset, Dataset]:
    if spec.family == GAUSSIAN_SHIFT:
        return gen_gaussian_shift(spec)
    return gen_lognormal_shift(spec)


# -- delimited text ----------------------------------------------------------


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _looks_like_header(first: list[str], second: list[str] | None) -> bool:
    # a text cell above a numeric cell marks a header; with one row, all text does
    if second is None:
        return not any(_is_number(c) for c in first)
    return any(not _is_number(a) and _is_number(b.strip()) for a, b in zip(first, second))


def _resolve_column(ref, header: list[str] | None, width: int, path) -> int:
    if isinstance(ref, (int, np.integer)) or (isinstance(ref, str) and header is None and ref.isdigit()):
        idx = int(ref)
        if not 0 <= idx < width:
            raise SchemaError(f"{path}: column index {idx} out of range (file has {width} columns)")
        return idx
    if header is None:
        raise SchemaError(f"{path}: column {ref!r} requested by name but the file has no header")
    try:
        return header.index(ref)
    except ValueError:
        raise SchemaError(f"{path}: no column named {ref!r}; available: {', '.join(header)}") from None


def load_csv(
    path,
    feature_columns: Sequence | None = None,
    label_column=None,
    delimiter: str = ",",
) -> Dataset:
    """Read a numeric feature matrix (and optional label column) from a
    delimited text file.

    A header row is detected when a text cell in the first row sits above a
    numeric cell in the second.
    ``feature_columns`` and ``label_column`` may be names or 0-based indices;
    by default every column except the label is a feature.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    first = [c.strip() for c in rows[0]]
    header = first if _looks_like_header(first, rows[1] if len(rows) > 1 else None) else None
    body = rows[1:] if header is not None else rows
    body_start = 2 if header is not None else 1
    if not body:
        raise DataError(f"{path}: no data rows")
    width = len(first)

    label_idx = None if label_column is None else _resolve_column(label_column, header, width, path)
    if feature_columns is None:
        feat_idx = [j for j in range(width) if j != label_idx]
    else:
        feat_idx = [_resolve_column(c, header, width, path) for c in feature_columns]
    if not feat_idx:
        raise SchemaError(f"{path}: no feature columns selected")
    names = [header[j] if header else f"x{j + 1}" for j in feat_idx]

    feats = np.empty((len(body), len(feat_idx)))
    labels = [] if label_idx is not None else None
    for i, row in enumerate(body):
        line = body_start + i
        if len(row) != width:
            raise ParseError(f"{path}: line {line} has {len(row)} fields, expected {width}", row=line)
        for k, j in enumerate(feat_idx):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: line {line}, column {names[k]!r}: cannot parse {cell!r} as a number",
                    row=line,
                    column=names[k],
                ) from None
            if not math.isfinite(value):
                raise ParseError(f"{path}: line {line}, column {names[k]!r}: non-finite value", row=line, column=names[k])
            feats[i, k] = value
        if labels is not None:
            cell = row[label_idx].strip()
            if cell == "":
                raise ParseError(f"{path}: line {line}: missing label", row=line)
            labels.append(cell)
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return Dataset(feats, None if labels is None else np.array(labels, dtype=object), name, tuple(names))


def write_csv(ds: Dataset, path, delimiter: str = ",", label_name: str = "label") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        header = list(ds.columns) + ([label_name] if ds.labels is not None else [])
        writer.writerow(header)
        for i, row in enumerate(ds.features):
            cells = [format(float(v), ".17g") for v in row]
            if ds.labels is not None:
                cells.append(str(ds.labels[i]))
            writer.writerow(cells)


# -- grouping and resampling -------------------------------------------------


def split_by_label(ds: Dataset, positive_label) -> tuple[Dataset, Dataset]:
    """Rows whose label differs from ``positive_label`` form X; the rest form Y."""
    if ds.labels is None:
        raise DataError(f"dataset {ds.name!r} has no labels to split on")
    positive = str(positive_label)
    mask = np.array([str(v) == positive for v in ds.labels])
    if not mask.any():
        present = ", ".join(sorted({str(v) for v in ds.labels}))
        raise DataError(f"label {positive!r} not found in {ds.name!r} (labels present: {present})")
    return ds.take(np.flatnonzero(~mask), f"{ds.name}[!={positive}]"), ds.take(np.flatnonzero(mask), f"{ds.name}[={positive}]")


def _seed_pair(seed):
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(2)


def subsample(X: Dataset, Y: Dataset, n_per_group: int, seed) -> tuple[Dataset, Dataset]:
    """Draw ``n_per_group`` rows without replacement from each group."""
    if n_per_group < 1:
        raise ConfigError("sample size must be >= 1")
    if n_per_group > min(len(X), len(Y)):
        raise InsufficientSampleError(
            f"requested {n_per_group} per group but groups have {len(X)} and {len(Y)} rows"
        )
    sx, sy = _seed_pair(seed)
    rx = make_rng(sx).choice(len(X), size=n_per_group, replace=False)
    ry = make_rng(sy).choice(len(Y), size=n_per_group, replace=False)
    return X.take(rx), Y.take(ry)


def null_mixture(X: Dataset, Y: Dataset, seed) -> tuple[Dataset, Dataset]:
    """Pool both groups, shuffle, and split back into the original sizes."""
    if len(X) < 1 or len(Y) < 1:
        raise InsufficientSampleError("null mixture needs two non-empty groups")
    if X.dims != Y.dims:
        raise DataError(f"groups have different dimensions ({X.dims} vs {Y.dims})")
    pooled = np.vstack([X.features, Y.features])
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    order = make_rng(root).permutation(pooled.shape[0])
    return (
        Dataset(pooled[order[: len(X)]], name=f"{X.name}~mix", columns=X.columns),
        Dataset(pooled[order[len(X):]], name=f"{Y.name}~mix", columns=Y.columns),
    )


def standardize(ds: Dataset) -> Dataset:
    """Center each column and divide by its population (1/M) standard deviation.

    Constant columns become zero and are reported in ``flags``.
    """
    if len(ds) < 2:
        raise InsufficientSampleError("standardizing needs at least 2 rows")
    feats = ds.features
    mean = feats.mean(axis=0)
    sd = feats.std(axis=0)
    constant = sd == 0
    out = (feats - mean) / np.where(constant, 1.0, sd)
    out[:, constant] = 0.0
    flags = tuple(f"constant column {ds.columns[j]!r} set to 0" for j in np.flatnonzero(constant))
    if flags:
        warnings.warn(f"{ds.name}: " + "; ".join(flags), stacklevel=2)
    return replace(ds, features=out, flags=ds.flags + flags)


# -- stand-in clinical files -------------------------------------------------


def heart_failure_standin(seed: int = 2017) -> Dataset:
    """Synthetic table with the heart-failure schema: 203 survivors, 96 deaths."""
    rng = make_rng(seed)
    groups = []
    for label, count, ef, creat, age in ((0, 203, 40.0, 1.2, 58.0), (1, 96, 33.0, 1.8, 65.0)):
        cols = {
            "age": np.round(rng.normal(age, 11.0, count).clip(40, 95)),
            "anaemia": rng.integers(0, 2, count),
            "creatinine_phosphokinase": np.round(rng.lognormal(5.7, 1.0, count)),
            "diabetes": rng.integers(0, 2, count),
            "ejection_fraction": np.round(rng.normal(ef, 11.0, count).clip(14, 80)),
            "high_blood_pressure": rng.integers(0, 2, count),
            "platelets": np.round(rng.normal(263000, 95000, count).clip(25000, 850000)),
            "serum_creatinine": np.round(rng.lognormal(np.log(creat), 0.45, count), 2).clip(0.5, 9.4),
            "serum_sodium": np.round(rng.normal(136.6, 4.4, count).clip(113, 148)),
            "sex": rng.integers(0, 2, count),
            "smoking": rng.integers(0, 2, count),
            "time": rng.integers(4, 286, count),
        }
        feats = np.column_stack([cols[c] for c in HEART_FAILURE_COLUMNS]).astype(float)
        groups.append((feats, np.full(count, str(label), dtype=object)))
    feats = np.vstack([g[0] for g in groups])
    labels = np.concatenate([g[1] for g in groups])
    order = rng.permutation(feats.shape[0])
    return Dataset(feats[order], labels[order], "heart_failure_standin", tuple(HEART_FAILURE_COLUMNS))


def breast_cancer_standin(seed: int = 1993) -> Dataset:
    """Synthetic table with the breast-cancer schema: 357 benign, 212 malignant."""
    rng = make_rng(seed)
    benign = np.array([12.1, 17.9, 78.1, 463.0, 0.092, 0.080, 0.046, 0.026, 0.174, 0.063])
    malignant = np.array([17.5, 21.6, 115.4, 978.0, 0.103, 0.145, 0.161, 0.088, 0.193, 0.063])
    parts = []
    for label, count, center in (("B", 357, benign), ("M", 212, malignant)):
        mean = center * rng.lognormal(0.0, 0.25, (count, center.size))
        se = 0.1 * center * rng.lognormal(0.0, 0.4, (count, center.size))
        worst = mean * (1.1 + 0.3 * rng.random((count, center.size)))
        parts.append((np.hstack([mean, se, worst]), np.full(count, label, dtype=object)))
    feats = np.round(np.vstack([p[0] for p in parts]), 6)
    labels = np.concatenate([p[1] for p in parts])
    order = rng.permutation(feats.shape[0])
    return Dataset(feats[order], labels[order], "breast_cancer_standin", tuple(BREAST_CANCER_COLUMNS))


def standin_path(name: str) -> str:
    """Path of a bundled stand-in file: ``"heart_failure"`` or ``"breast_cancer"``."""
    from importlib import resources

    files = {"heart_failure": "heart_failure_standin.csv", "breast_cancer": "breast_cancer_standin.csv"}
    if name not in files:
        raise ConfigError(f"unknown stand-in {name!r}; choose from {', '.join(files)}")
    return str(resources.files("qfuse") / "standins" / files[name])
