"""End-to-end orchestration: extract -> scale -> project -> classify, plus
bit-exact persistence of the whole model as one versioned text bundle.

Bundle format (version 1)
-------------------------

Line 1 is the magic ``PDFSIFT-MODEL v1``. Named sections follow in fixed
order: ``[FEATURES]``, ``[SCALER]``, ``[PCA]``, ``[MLP]``, ``[META]``.
Scalars are ``key = value`` lines; vectors are one comma-separated row;
matrices declare ``key = R x C`` and then R rows, row-major. Every real is
rendered as the shortest decimal that round-trips to the same float64
(at most 17 significant digits), so save -> load -> save is byte-identical
and loaded models predict bit-identically. Line endings are LF.

Loading validates the magic, every array shape, finiteness of every value,
and the orthonormality of the PCA basis before returning; failures raise
:class:`ModelInvalidError` with a reason code.
"""

from __future__ import annotations

import datetime as _datetime
from dataclasses import dataclass

import numpy as np

from .errors import (
    BAD_MAGIC,
    NON_FINITE,
    ORTHO_FAIL,
    SHAPE_MISMATCH,
    VERSION_UNSUPPORTED,
    InvalidComponentCountError,
    ModelInvalidError,
    SingleClassError,
)
from .features import FEATURE_COUNT, FEATURE_NAMES, FeatureVector, extract_features
from .ioutil import atomic_write_text
from .mlp import MlpClassifier, TrainConfig, TrainingHistory
from .pca import PrincipalComponents
from .pdfparse import parse_document
from .preprocess import FeatureMatrix, FeatureScaler, split_train_validation

BUNDLE_MAGIC = "PDFSIFT-MODEL v1"
_ORTHO_TOLERANCE = 1e-9


@dataclass
class TrainingMetadata:
    components: int
    threshold: float
    seed: int
    epochs: int
    batch_size: int
    learning_rate: float
    dropout_rate: float
    validation_fraction: float
    train_rows: int
    validation_rows: int
    created_at: str


@dataclass
class ModelBundle:
    feature_names: tuple[str, ...]
    scaler: FeatureScaler
    pca: PrincipalComponents
    n_components: int
    mlp: MlpClassifier
    metadata: TrainingMetadata


@dataclass
class ScoreResult:
    probability: float
    verdict: str
    features: FeatureVector


def resolve_components(components: int | str, pca: PrincipalComponents) -> int:
    """Turn a requested component count (or ``auto:<ratio>``) into P."""
    if isinstance(components, str):
        text = components.strip().lower()
        if not text.startswith("auto:"):
            raise InvalidComponentCountError(f"cannot parse component selector {components!r}")
        try:
            ratio = float(text.split(":", 1)[1])
        except ValueError:
            raise InvalidComponentCountError(f"cannot parse component selector {components!r}") from None
        return pca.choose_components(ratio)
    P = int(components)
    if not (1 <= P <= pca.n_components_):
        raise InvalidComponentCountError(f"component count must be in 1..{pca.n_components_}, got {P}")
    return P


def train_pipeline(
    features: FeatureMatrix,
    components: int | str,
    config: TrainConfig,
    *,
    threshold: float = 0.5,
    created_at: str | None = None,
) -> tuple[ModelBundle, TrainingHistory]:
    """Split, fit scaler and PCA on the training split only, project, train
    the MLP with input width P, and assemble the persistable bundle."""
    config.validate()
    if np.unique(features.y).size < 2:
        raise SingleClassError("training needs both benign and malicious rows")
    train, validation = split_train_validation(features, config.validation_fraction, config.seed)

    scaler = FeatureScaler(feature_names=list(features.feature_names)).fit(train.X)
    scaled_train = scaler.transform(train.X)
    scaled_validation = scaler.transform(validation.X)

    pca = PrincipalComponents().fit(scaled_train)
    P = resolve_components(components, pca)
    projected_train = pca.transform(scaled_train, P)
    projected_validation = pca.transform(scaled_validation, P)

    mlp = MlpClassifier(
        hidden_units=(72, 72),
        epochs=config.epochs,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        dropout_rate=config.dropout_rate,
        validation_fraction=config.validation_fraction,
        seed=config.seed,
    )
    mlp.fit(projected_train, train.y, projected_validation, validation.y)

    if created_at is None:
        created_at = _datetime.datetime.now(_datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    metadata = TrainingMetadata(
        components=P,
        threshold=threshold,
        seed=config.seed,
        epochs=config.epochs,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        dropout_rate=config.dropout_rate,
        validation_fraction=config.validation_fraction,
        train_rows=train.n_samples,
        validation_rows=validation.n_samples,
        created_at=created_at,
    )
    bundle = ModelBundle(
        feature_names=tuple(features.feature_names),
        scaler=scaler,
        pca=pca,
        n_components=P,
        mlp=mlp,
        metadata=metadata,
    )
    validate_bundle(bundle)
    return bundle, mlp.history_


def score_matrix(bundle: ModelBundle, X: np.ndarray) -> np.ndarray:
    """Probabilities for pre-extracted feature rows."""
    scaled = bundle.scaler.transform(X)
    projected = bundle.pca.transform(scaled, bundle.n_components)
    return bundle.mlp.predict_proba(projected)

def score_file(bundle: ModelBundle, data: bytes) -> ScoreResult:
    """Parse raw bytes, extract features, and score them; total on any input."""
    doc = parse_document(data)
    features = extract_features(doc, data)
    probability = float(score_matrix(bundle, features.values.reshape(1, -1))[0])
    verdict = "malicious" if probability >= bundle.metadata.threshold else "benign"
    return ScoreResult(probability=probability, verdict=verdict, features=features)


# -- serialization -----------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def _row(values) -> str:
    return ",".join(_fmt(v) for v in np.asarray(values, dtype=np.float64).ravel())


def bundle_to_text(bundle: ModelBundle) -> str:
    lines: list[str] = [BUNDLE_MAGIC]
    lines.append("[FEATURES]")
    lines.append(f"count = {len(bundle.feature_names)}")
    lines.extend(bundle.feature_names)

    scaler = bundle.scaler
    lines.append("[SCALER]")
    lines.append(f"means = {_row(scaler.means_)}")
    lines.append(f"stds = {_row(scaler.stds_)}")
    lines.append("zero_variance = " + ",".join(str(int(z)) for z in scaler.zero_variance_))

    pca = bundle.pca
    lines.append("[PCA]")
    lines.append(f"fitted_rows = {pca.n_samples_}")
    lines.append(f"fitted_cols = {pca.n_features_in_}")
    lines.append(f"column_means = {_row(pca.column_means_)}")
    lines.append(f"singular_values = {_row(pca.singular_values_)}")
    lines.append(f"components = {pca.components_.shape[0]} x {pca.components_.shape[1]}")
    lines.extend(_row(row) for row in pca.components_)

    mlp = bundle.mlp
    lines.append("[MLP]")
    lines.append("layer_sizes = " + ",".join(str(s) for s in mlp.layer_sizes_))
    lines.append(f"dropout_rate = {_fmt(mlp.dropout_rate)}")
    lines.append(f"bn_momentum = {_fmt(mlp.bn_momentum)}")
    lines.append(f"bn_epsilon = {_fmt(mlp.bn_epsilon)}")
    for layer, weights in enumerate(mlp.weights_):
        lines.append(f"weights{layer} = {weights.shape[0]} x {weights.shape[1]}")
        lines.extend(_row(row) for row in weights)
        lines.append(f"biases{layer} = {_row(mlp.biases_[layer])}")
        if layer < len(mlp.gammas_):
            lines.append(f"gamma{layer} = {_row(mlp.gammas_[layer])}")
            lines.append(f"beta{layer} = {_row(mlp.betas_[layer])}")
            lines.append(f"running_mean{layer} = {_row(mlp.running_means_[layer])}")
            lines.append(f"running_var{layer} = {_row(mlp.running_vars_[layer])}")

    meta = bundle.metadata
    lines.append("[META]")
    lines.append(f"components = {bundle.n_components}")
    lines.append(f"threshold = {_fmt(meta.threshold)}")
    lines.append(f"seed = {meta.seed}")
    lines.append(f"epochs = {meta.epochs}")
    lines.append(f"batch_size = {meta.batch_size}")
    lines.append(f"learning_rate = {_fmt(meta.learning_rate)}")
    lines.append(f"dropout_rate = {_fmt(meta.dropout_rate)}")
    lines.append(f"validation_fraction = {_fmt(meta.validation_fraction)}")
    lines.append(f"train_rows = {meta.train_rows}")
    lines.append(f"validation_rows = {meta.validation_rows}")
    lines.append(f"created_at = {meta.created_at}")
    return "\n".join(lines) + "\n"


class _Cursor:
    def __init__(self, lines: list[str]):
        self.lines = lines
        self.index = 0

    def next_line(self) -> str:
        if self.index >= len(self.lines):
            raise ModelInvalidError(SHAPE_MISMATCH, "unexpected end of bundle")
        line = self.lines[self.index]
        self.index += 1
        return line

    def expect(self, literal: str):
        if self.next_line() != literal:
            raise ModelInvalidError(SHAPE_MISMATCH, f"expected {literal!r}")

    def keyed(self, key: str) -> str:
        line = self.next_line()
        prefix = f"{key} = "
        if not line.startswith(prefix):
            raise ModelInvalidError(SHAPE_MISMATCH, f"expected key {key!r}")
        return line[len(prefix) :]


def _parse_floats(text: str, expected: int | None = None) -> np.ndarray:
    parts = text.split(",") if text else []
    try:
        values = np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError:
        raise ModelInvalidError(SHAPE_MISMATCH, "malformed numeric row") from None
    if expected is not None and values.shape[0] != expected:
        raise ModelInvalidError(SHAPE_MISMATCH, f"expected {expected} values per row")
    return values


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ModelInvalidError(SHAPE_MISMATCH, f"malformed integer {text!r}") from None


def _parse_matrix(cursor: _Cursor, key: str) -> np.ndarray:
    shape_text = cursor.keyed(key)
    parts = shape_text.split(" x ")
    if len(parts) != 2:
        raise ModelInvalidError(SHAPE_MISMATCH, f"malformed shape for {key!r}")
    rows, cols = _parse_int(parts[0]), _parse_int(parts[1])
    if rows < 0 or cols < 1 or rows > 1_000_000:
        raise ModelInvalidError(SHAPE_MISMATCH, f"implausible shape for {key!r}")
    data = np.empty((rows, cols), dtype=np.float64)
    for r in range(rows):
        data[r] = _parse_floats(cursor.next_line(), expected=cols)
    return data


def parse_bundle_text(text: str) -> ModelBundle:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    cursor = _Cursor(lines)

    magic = cursor.next_line() if lines else ""
    if magic != BUNDLE_MAGIC:
        if magic.startswith("PDFSIFT-MODEL "):
            raise ModelInvalidError(VERSION_UNSUPPORTED, f"unsupported version {magic!r}")
        raise ModelInvalidError(BAD_MAGIC, "not a model bundle")

    cursor.expect("[FEATURES]")
    count = _parse_int(cursor.keyed("count"))
    if count != FEATURE_COUNT:
        raise ModelInvalidError(SHAPE_MISMATCH, f"bundle must carry {FEATURE_COUNT} features")
    feature_names = tuple(cursor.next_line() for _ in range(count))

    cursor.expect("[SCALER]")
    means = _parse_floats(cursor.keyed("means"), expected=count)
    stds = _parse_floats(cursor.keyed("stds"), expected=count)
    zero_variance_text = cursor.keyed("zero_variance").split(",")
    if len(zero_variance_text) != count or any(z not in ("0", "1") for z in zero_variance_text):
        raise ModelInvalidError(SHAPE_MISMATCH, "malformed zero_variance row")
    scaler = FeatureScaler(feature_names=list(feature_names))
    scaler.means_ = means
    scaler.stds_ = stds
    scaler.zero_variance_ = np.array([z == "1" for z in zero_variance_text])
    scaler.n_features_in_ = count

    cursor.expect("[PCA]")
    fitted_rows = _parse_int(cursor.keyed("fitted_rows"))
    fitted_cols = _parse_int(cursor.keyed("fitted_cols"))
    column_means = _parse_floats(cursor.keyed("column_means"), expected=count)
    singular_values = _parse_floats(cursor.keyed("singular_values"))
    components = _parse_matrix(cursor, "components")
    pca = PrincipalComponents()
    pca.column_means_ = column_means
    pca.singular_values_ = singular_values
    pca.components_ = components
    pca.n_components_ = components.shape[0]
    pca.n_samples_ = fitted_rows
    pca.n_features_in_ = fitted_cols

    cursor.expect("[MLP]")
    try:
        layer_sizes = [int(s) for s in cursor.keyed("layer_sizes").split(",")]
    except ValueError:
        raise ModelInvalidError(SHAPE_MISMATCH, "malformed layer_sizes") from None
    if len(layer_sizes) < 2:
        raise ModelInvalidError(SHAPE_MISMATCH, "layer_sizes must list at least two layers")
    dropout_rate = float(_parse_floats(cursor.keyed("dropout_rate"), expected=1)[0])
    bn_momentum = float(_parse_floats(cursor.keyed("bn_momentum"), expected=1)[0])
    bn_epsilon = float(_parse_floats(cursor.keyed("bn_epsilon"), expected=1)[0])
    weights, biases, gammas, betas, running_means, running_vars = [], [], [], [], [], []
    n_layers = len(layer_sizes) - 1
    for layer in range(n_layers):
        w = _parse_matrix(cursor, f"weights{layer}")
        if w.shape != (layer_sizes[layer], layer_sizes[layer + 1]):
            raise ModelInvalidError(SHAPE_MISMATCH, f"weights{layer} shape mismatch")
        weights.append(w)
        biases.append(_parse_floats(cursor.keyed(f"biases{layer}"), expected=layer_sizes[layer + 1]))
        if layer < n_layers - 1:
            width = layer_sizes[layer + 1]
            gammas.append(_parse_floats(cursor.keyed(f"gamma{layer}"), expected=width))
            betas.append(_parse_floats(cursor.keyed(f"beta{layer}"), expected=width))
            running_means.append(_parse_floats(cursor.keyed(f"running_mean{layer}"), expected=width))
            running_vars.append(_parse_floats(cursor.keyed(f"running_var{layer}"), expected=width))

    cursor.expect("[META]")
    n_components = _parse_int(cursor.keyed("components"))
    threshold = float(_parse_floats(cursor.keyed("threshold"), expected=1)[0])
    seed = _parse_int(cursor.keyed("seed"))
    epochs = _parse_int(cursor.keyed("epochs"))
    batch_size = _parse_int(cursor.keyed("batch_size"))
    learning_rate = float(_parse_floats(cursor.keyed("learning_rate"), expected=1)[0])
    meta_dropout = float(_parse_floats(cursor.keyed("dropout_rate"), expected=1)[0])
    validation_fraction = float(_parse_floats(cursor.keyed("validation_fraction"), expected=1)[0])
    train_rows = _parse_int(cursor.keyed("train_rows"))
    validation_rows = _parse_int(cursor.keyed("validation_rows"))
    created_at = cursor.keyed("created_at")

    mlp = MlpClassifier(
        hidden_units=tuple(layer_sizes[1:-1]),
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=learning_rate,
        dropout_rate=dropout_rate,
        validation_fraction=validation_fraction,
        seed=seed,
        bn_momentum=bn_momentum,
        bn_epsilon=bn_epsilon,
    )
    mlp.layer_sizes_ = layer_sizes
    mlp.weights_ = weights
    mlp.biases_ = biases
    mlp.gammas_ = gammas
    mlp.betas_ = betas
    mlp.running_means_ = running_means
    mlp.running_vars_ = running_vars

    metadata = TrainingMetadata(
        components=n_components,
        threshold=threshold,
        seed=seed,
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=learning_rate,
        dropout_rate=meta_dropout,
        validation_fraction=validation_fraction,
        train_rows=train_rows,
        validation_rows=validation_rows,
        created_at=created_at,
    )
    bundle = ModelBundle(
        feature_names=feature_names,
        scaler=scaler,
        pca=pca,
        n_components=n_components,
        mlp=mlp,
        metadata=metadata,
    )
    validate_bundle(bundle)
    return bundle


def validate_bundle(bundle: ModelBundle) -> None:
    """Shape, finiteness, and orthonormality checks shared by save and load."""
    n = len(bundle.feature_names)
    if n != FEATURE_COUNT:
        raise ModelInvalidError(SHAPE_MISMATCH, f"expected {FEATURE_COUNT} feature names")
    arrays = [
        bundle.scaler.means_,
        bundle.scaler.stds_,
        bundle.pca.column_means_,
        bundle.pca.singular_values_,
        bundle.pca.components_,
        *bundle.mlp.weights_,
        *bundle.mlp.biases_,
        *bundle.mlp.gammas_,
        *bundle.mlp.betas_,
        *bundle.mlp.running_means_,
        *bundle.mlp.running_vars_,
    ]
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise ModelInvalidError(NON_FINITE, "bundle contains non-finite values")
    if bundle.scaler.means_.shape != (n,) or bundle.pca.components_.shape[1] != n:
        raise ModelInvalidError(SHAPE_MISMATCH, "scaler/PCA width mismatch")
    if not (1 <= bundle.n_components <= bundle.pca.components_.shape[0]):
        raise ModelInvalidError(SHAPE_MISMATCH, "selected component count out of range")
    if bundle.mlp.layer_sizes_[0] != bundle.n_components or bundle.mlp.layer_sizes_[-1] != 1:
        raise ModelInvalidError(SHAPE_MISMATCH, "MLP width does not match selected components")
    sv = bundle.pca.singular_values_
    if sv.shape[0] != bundle.pca.components_.shape[0] or np.any(sv < 0) or np.any(np.diff(sv) > 0):
        raise ModelInvalidError(SHAPE_MISMATCH, "singular values must be non-increasing and nonnegative")
    gram = bundle.pca.components_ @ bundle.pca.components_.T
    if np.max(np.abs(gram - np.eye(gram.shape[0]))) > _ORTHO_TOLERANCE:
        raise ModelInvalidError(ORTHO_FAIL, "PCA components are not orthonormal")


def save_bundle(bundle: ModelBundle, path) -> None:
    validate_bundle(bundle)
    atomic_write_text(path, bundle_to_text(bundle))


def load_bundle(path) -> ModelBundle:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return parse_bundle_text(handle.read())
