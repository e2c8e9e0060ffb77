"""Dataset assembly, z-score standardization, and deterministic splits.

The feature CSV contract shared with the CLI:
header ``path,label,<48 feature names in canonical order>``, one row per
file, label 0 (benign) or 1 (malicious), values as shortest round-trip
decimals, UTF-8, LF line endings.
"""

from __future__ import annotations

import csv
import io
import math
import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    InsufficientSamplesError,
    InvalidFractionError,
    NonFiniteInputError,
    SchemaMismatchError,
)
from .features import FEATURE_NAMES
from .ioutil import atomic_write_text

#: Columns with population std below this are flagged and passed through
#: centered-only (sigma fixed to 1).
ZERO_VARIANCE_THRESHOLD = 1e-12


@dataclass
class FeatureMatrix:
    """S samples by N features, with parallel labels and source paths."""

    X: np.ndarray
    y: np.ndarray
    paths: list[str]
    feature_names: tuple[str, ...] = tuple(FEATURE_NAMES)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise SchemaMismatchError("feature matrix must be 2-D")
        if self.X.shape[1] != len(self.feature_names):
            raise SchemaMismatchError(
                f"matrix has {self.X.shape[1]} columns, expected {len(self.feature_names)}"
            )
        if not (self.X.shape[0] == self.y.shape[0] == len(self.paths)):
            raise SchemaMismatchError("rows, labels, and paths must align")
        if not np.all(np.isfinite(self.X)):
            raise NonFiniteInputError("feature matrix contains non-finite values")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise SchemaMismatchError("labels must be 0 (benign) or 1 (malicious)")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "FeatureMatrix":
        indices = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(
            self.X[indices],
            self.y[indices],
            [self.paths[i] for i in indices],
            self.feature_names,
        )


class FeatureScaler(BaseEstimator, TransformerMixin):
    """Per-column z-score standardization with the population (1/S) std.

    Zero-variance columns are flagged and stored with sigma = 1, so they pass
    through centered-only instead of dividing by zero.
    """

    def __init__(self, feature_names=None):
        self.feature_names = feature_names

    def fit(self, X, y=None):
        X = _as_matrix(X)
        if X.shape[0] < 2:
            raise InsufficientSamplesError("scaler needs at least 2 samples")
        self.means_ = X.mean(axis=0)
        stds = X.std(axis=0)
        self.zero_variance_ = stds < ZERO_VARIANCE_THRESHOLD
        self.stds_ = np.where(self.zero_variance_, 1.0, stds)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        self._check_fitted()
        X = _as_matrix(X, n_features=self.n_features_in_)
        return (X - self.means_) / self.stds_

    def inverse_transform(self, X):
        self._check_fitted()
        X = _as_matrix(X, n_features=self.n_features_in_)
        return X * self.stds_ + self.means_

    def _check_fitted(self):
        if not hasattr(self, "means_"):
            raise SchemaMismatchError("scaler is not fitted")


def _as_matrix(X, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise SchemaMismatchError("expected a 2-D array")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInputError("array contains non-finite values")
    if n_features is not None and X.shape[1] != n_features:
        raise SchemaMismatchError(f"expected {n_features} columns, got {X.shape[1]}")
    return X


def split_train_validation(
    matrix: FeatureMatrix, fraction: float, seed: int
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Stratified split: within each class, a seeded shuffle sends the first
    ceil(fraction * class_size) rows to validation. Deterministic per seed."""
    if not (0.0 < fraction < 1.0):
        raise InvalidFractionError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    val_idx: list[np.ndarray] = []
    for label in (0, 1):
        members = np.flatnonzero(matrix.y == label)
        if members.size == 0:
            _warnings.warn(f"class {label} has no rows; it contributes nothing to the split")
            continue
        shuffled = rng.permutation(members)
        k = math.ceil(fraction * members.size)
        val_idx.append(shuffled[:k])
        train_idx.append(shuffled[k:])
    train = np.concatenate(train_idx) if train_idx else np.empty(0, dtype=np.int64)
    val = np.concatenate(val_idx) if val_idx else np.empty(0, dtype=np.int64)
    return matrix.subset(train), matrix.subset(val)


def _format_value(value: float) -> str:
    return repr(float(value))


def feature_csv_text(matrix: FeatureMatrix) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["path", "label", *matrix.feature_names])
    for path, label, row in zip(matrix.paths, matrix.y, matrix.X):
        writer.writerow([path, int(label), *[_format_value(v) for v in row]])
    return buffer.getvalue()


def write_feature_csv(matrix: FeatureMatrix, path) -> None:
    atomic_write_text(path, feature_csv_text(matrix))


def read_feature_csv(path) -> FeatureMatrix:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatchError("empty feature CSV") from None
        expected = ["path", "label", *FEATURE_NAMES]
        if header != expected:
            raise SchemaMismatchError("feature CSV header does not match the canonical schema")
        paths: list[str] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise SchemaMismatchError(f"line {line_no}: expected {len(expected)} fields")
            paths.append(row[0])
            if row[1] not in ("0", "1"):
                raise SchemaMismatchError(f"line {line_no}: label must be 0 or 1")
            labels.append(int(row[1]))
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError:
                raise SchemaMismatchError(f"line {line_no}: non-numeric feature value") from None
    X = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(FEATURE_NAMES)))
    return FeatureMatrix(X, np.array(labels, dtype=np.int64), paths)
