"""Dataset loading, toy generators, and contamination-preserving splits.

CSV contract: UTF-8, comma separator, one header row, final column named
"label" with values 0/1 (1 = anomaly), every other column numeric.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import NoPositivesError

TOY_KINDS = ("central_cluster", "double_cluster", "square_toroid")

# Toy geometry. The square toroid constants are calibrated so that, at
# n=1000 / 3% contamination with default forest parameters, the full
# forest averages poorly while a handful of lucky trees isolate the hole
# (wide frame, anomalies well clear of the inner edge).
_SCATTER_HALF_WIDTH = 8.0
_CENTRAL_STD = 1.0
_CENTRAL_EXCLUSION_RADIUS = 4.0
_CLUSTER_CENTERS = ((-3.0, 0.0), (3.0, 0.0))
_CLUSTER_STD = 0.6
_CLUSTER_EXCLUSION_RADIUS = 2.0
_TOROID_OUTER = 4.0
_TOROID_INNER = 2.0
_TOROID_HOLE = 1.0


@dataclass
class LabeledDataset:
    """Feature matrix with optional binary anomaly labels (1 = anomaly)."""

    features: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ValueError("dataset needs at least one row and one column")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (n,):
                raise ValueError("labels must have one entry per row")
            if not np.isin(self.labels, (0, 1)).all():
                raise ValueError("labels must be binary (0 or 1)")
            self.labels = self.labels.astype(np.int64)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def contamination(self) -> float:
        if self.labels is None:
            raise ValueError(f"dataset {self.name!r} has no labels")
        return float(self.labels.sum()) / self.n_rows

    def subset(self, rows, name: str | None = None) -> LabeledDataset:
        rows = np.asarray(rows, dtype=np.int64)
        labels = None if self.labels is None else self.labels[rows]
        return LabeledDataset(self.features[rows], labels,
                              name=self.name if name is None else name)


def load_csv(path) -> LabeledDataset:
    """Parse a labeled CSV per the contract above."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        if header[-1].strip() != "label":
            raise ValueError(f"{path}: final column must be named 'label'")
        if len(header) < 2:
            raise ValueError(f"{path}: no feature columns before 'label'")
        n_cols = len(header)

        features, labels = [], []
        for line, row in enumerate(reader, start=2):
            if len(row) != n_cols:
                raise ValueError(
                    f"{path}: row {line} has {len(row)} fields, expected {n_cols}"
                )
            values = []
            for col, cell in enumerate(row[:-1]):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {cell!r} at row {line}, "
                        f"column {header[col]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ValueError(
                        f"{path}: non-finite value {cell!r} at row {line}, "
                        f"column {header[col]!r}"
                    )
                values.append(v)
            label = row[-1].strip()
            if label not in ("0", "1"):
                raise ValueError(
                    f"{path}: label must be 0 or 1 at row {line}, got {label!r}"
                )
            features.append(values)
            labels.append(int(label))

    if not features:
        raise ValueError(f"{path}: no data rows")
    return LabeledDataset(np.array(features), np.array(labels), name=path.stem)


def write_csv(ds: LabeledDataset, path) -> None:
    """Write a labeled dataset back out; floats keep full precision."""
    if ds.labels is None:
        raise ValueError("cannot write a dataset without labels")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(ds.n_features)] + ["label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([format(v, ".17g") for v in row] + [int(label)])


def _uniform_box(rng, n, half_width):
    return rng.uniform(-half_width, half_width, size=(n, 2))


def _uniform_excluding(rng, n, half_width, excluded):
    """Uniform points in the box with `excluded(points)` regions rejected."""
    chunks = []
    remaining = n
    while remaining > 0:
        batch = _uniform_box(rng, max(2 * remaining, 16), half_width)
        keep = batch[~excluded(batch)]
        chunks.append(keep[:remaining])
        remaining -= len(chunks[-1])
    return np.concatenate(chunks)


def make_toy(kind: str, n_inliers: int, n_anomalies: int, seed: int) -> LabeledDataset:
    """Generate one of the 2-D toy datasets.

    central_cluster: isotropic Gaussian blob plus uniform far scatter.
    double_cluster: two separated blobs plus uniform scatter.
    square_toroid: uniform points on a square frame, anomalies uniform in
    the inner hole.
    """
    if kind not in TOY_KINDS:
        raise ValueError(f"unknown toy kind {kind!r}, expected one of {TOY_KINDS}")
    if n_inliers < 10:
        raise ValueError(f"n_inliers must be >= 10, got {n_inliers}")
    if n_anomalies < 1:
        raise ValueError(f"n_anomalies must be >= 1, got {n_anomalies}")

    rng = np.random.default_rng(seed)
    if kind == "central_cluster":
        inliers = rng.normal(0.0, _CENTRAL_STD, size=(n_inliers, 2))
        anomalies = _uniform_excluding(
            rng, n_anomalies, _SCATTER_HALF_WIDTH,
            lambda p: np.hypot(p[:, 0], p[:, 1]) < _CENTRAL_EXCLUSION_RADIUS,
        )
    elif kind == "double_cluster":
        centers = np.asarray(_CLUSTER_CENTERS)
        which = rng.integers(len(centers), size=n_inliers)
        inliers = centers[which] + rng.normal(0.0, _CLUSTER_STD, size=(n_inliers, 2))

        def near_a_cluster(p):
            dist = np.hypot(p[:, None, 0] - centers[None, :, 0],
                            p[:, None, 1] - centers[None, :, 1])
            return (dist < _CLUSTER_EXCLUSION_RADIUS).any(axis=1)

        anomalies = _uniform_excluding(rng, n_anomalies, _SCATTER_HALF_WIDTH,
                                       near_a_cluster)
    else:  # square_toroid
        inliers = _uniform_excluding(
            rng, n_inliers, _TOROID_OUTER,
            lambda p: np.abs(p).max(axis=1) < _TOROID_INNER,
        )
        anomalies = _uniform_box(rng, n_anomalies, _TOROID_HOLE)

    features = np.concatenate([inliers, anomalies])
    labels = np.concatenate([np.zeros(n_inliers, dtype=np.int64),
                             np.ones(n_anomalies, dtype=np.int64)])
    return LabeledDataset(features, labels, name=kind)


@dataclass(frozen=True)
class SplitSpec:
    """Stratified split parameters; both fractions preserve contamination."""

    test_fraction: float = 0.5
    labeled_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction <= 1.0:
            raise ValueError(f"test_fraction must be in (0, 1], got {self.test_fraction}")
        if not 0.0 < self.labeled_fraction <= 1.0:
            raise ValueError(
                f"labeled_fraction must be in (0, 1], got {self.labeled_fraction}"
            )
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


def stratified_split(ds: LabeledDataset, spec: SplitSpec):
    """Split into (train, test), anomalies and inliers divided independently.

    Each class is permuted and cut at test_fraction, so contamination is
    preserved up to integer rounding; both sides keep at least one member
    of every class.
    """
    if ds.labels is None:
        raise ValueError(f"dataset {ds.name!r} has no labels to stratify on")
    rng = np.random.default_rng(spec.seed)
    test_parts, train_parts = [], []
    for cls in (0, 1):
        rows = np.flatnonzero(ds.labels == cls)
        if rows.size < 2:
            raise ValueError(
                f"class {cls} has {rows.size} member(s); need >= 2 to split"
            )
        perm = rng.permutation(rows)
        n_test = int(round(rows.size * spec.test_fraction))
        n_test = min(max(n_test, 1), rows.size - 1)
        test_parts.append(perm[:n_test])
        train_parts.append(perm[n_test:])
    train_rows = np.sort(np.concatenate(train_parts))
    test_rows = np.sort(np.concatenate(test_parts))
    return (ds.subset(train_rows, name=f"{ds.name}/train"),
            ds.subset(test_rows, name=f"{ds.name}/test"))


def sample_labeled_fraction(train: LabeledDataset, fraction: float,
                            seed: int) -> LabeledDataset:
    """Stratified subsample of the training half used as weak supervision.

    Errors if the fraction is too small to keep at least one anomaly and
    one inlier. fraction=1.0 returns the input unchanged.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if train.labels is None:
        raise ValueError(f"dataset {train.name!r} has no labels")
    if fraction == 1.0:
        return train

    rng = np.random.default_rng(seed)
    kept = []
    for cls in (0, 1):
        rows = np.flatnonzero(train.labels == cls)
        n_keep = int(round(rows.size * fraction))
        if n_keep < 1:
            if cls == 1:
                raise NoPositivesError(
                    f"fraction {fraction} keeps no anomalies out of {rows.size}"
                )
            raise ValueError(
                f"fraction {fraction} keeps no inliers out of {rows.size}"
            )
        kept.append(rng.permutation(rows)[:n_keep])
    rows = np.sort(np.concatenate(kept))
    return train.subset(rows, name=f"{train.name}/labeled")
