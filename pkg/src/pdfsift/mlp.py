"""From-scratch multilayer perceptron trained by back-propagation with
mini-batch SGD.

Architecture: input -> hidden(72) -> hidden(72) -> sigmoid(1). Each hidden
layer applies an affine transform, batch normalization on the pre-activation
(batch statistics while training, running statistics at inference), ReLU,
then inverted dropout (training only). The loss is binary cross-entropy.

Training is deliberately single-threaded and fully seeded: (seed, data,
config) determine the trained parameters bit-for-bit. Each epoch shuffles
the training rows, walks mini-batches of ``batch_size`` (a final short batch
runs when it has at least 2 rows, otherwise it is skipped), and records
training loss/accuracy, validation accuracy, and wall-clock seconds. The
returned parameters are the snapshot with the best validation accuracy,
earliest epoch winning ties.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import (
    BatchTooSmallError,
    InsufficientSamplesError,
    InvalidConfigError,
    NumericDivergenceError,
    SchemaMismatchError,
)
from .ioutil import atomic_write_text

_PROB_FLOOR = 1e-12


@dataclass
class TrainConfig:
    epochs: int = 5000
    batch_size: int = 64
    learning_rate: float = 0.01
    dropout_rate: float = 0.15
    validation_fraction: float = 0.2
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if self.epochs < 1:
            raise InvalidConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidConfigError("batch_size must be >= 1")
        if not (self.learning_rate > 0):
            raise InvalidConfigError("learning_rate must be > 0")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise InvalidConfigError("dropout_rate must be in [0, 1)")
        if not (0.0 < self.validation_fraction < 1.0):
            raise InvalidConfigError("validation_fraction must be in (0, 1)")
        return self


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    validation_accuracy: float
    seconds: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "train_acc", "val_acc", "seconds"])
        for r in self.records:
            writer.writerow(
                [
                    r.epoch,
                    repr(float(r.train_loss)),
                    repr(float(r.train_accuracy)),
                    repr(float(r.validation_accuracy)),
                    repr(float(r.seconds)),
                ]
            )
        return buffer.getvalue()

    def write_csv(self, path) -> None:
        atomic_write_text(path, self.to_csv_text())

    def mean_epoch_seconds(self) -> float:
        if not self.records:
            return 0.0
        return float(np.mean([r.seconds for r in self.records]))


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    gammas: list[np.ndarray]
    betas: list[np.ndarray]

    def all_finite(self) -> bool:
        arrays = [*self.weights, *self.biases, *self.gammas, *self.betas]
        return all(np.all(np.isfinite(a)) for a in arrays)


@dataclass
class ForwardTrace:
    """Instrumentation view of one forward pass (tests hook into this)."""

    pre_batchnorm: list[np.ndarray]
    batch_normalized: list[np.ndarray]
    post_activation: list[np.ndarray]
    post_dropout: list[np.ndarray]
    probabilities: np.ndarray


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def binary_cross_entropy(y_hat, y):
    """Elementwise BCE with predictions clamped away from exact 0/1."""
    y_hat = np.clip(np.asarray(y_hat, dtype=np.float64), _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    y = np.asarray(y, dtype=np.float64)
    return -(y * np.log(y_hat) + (1.0 - y) * np.log(1.0 - y_hat))


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Binary MLP with batch normalization, dropout, and seeded SGD.

    ``predict_proba`` returns the probability of the positive (malicious)
    class as a flat array, matching the single sigmoid output unit.
    """

    def __init__(
        self,
        hidden_units: tuple[int, ...] = (72, 72),
        epochs: int = 5000,
        batch_size: int = 64,
        learning_rate: float = 0.01,
        dropout_rate: float = 0.15,
        validation_fraction: float = 0.2,
        seed: int = 0,
        bn_momentum: float = 0.1,
        bn_epsilon: float = 1e-5,
    ):
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.dropout_rate = dropout_rate
        self.validation_fraction = validation_fraction
        self.seed = seed
        self.bn_momentum = bn_momentum
        self.bn_epsilon = bn_epsilon

    # -- parameter setup -----------------------------------------------------

    def initialize(self, input_dim: int) -> "MlpClassifier":
        """Seeded Glorot-uniform weights, zero biases, identity batch norm."""
        if input_dim < 1:
            raise InvalidConfigError("input_dim must be >= 1")
        rng = np.random.default_rng(self.seed)
        sizes = [int(input_dim), *[int(h) for h in self.hidden_units], 1]
        self.layer_sizes_ = sizes
        self.weights_ = []
        self.biases_ = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights_.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases_.append(np.zeros(fan_out))
        n_hidden = len(sizes) - 2
        self.gammas_ = [np.ones(sizes[i + 1]) for i in range(n_hidden)]
        self.betas_ = [np.zeros(sizes[i + 1]) for i in range(n_hidden)]
        self.running_means_ = [np.zeros(sizes[i + 1]) for i in range(n_hidden)]
        self.running_vars_ = [np.ones(sizes[i + 1]) for i in range(n_hidden)]
        return self

    def _check_initialized(self):
        if not hasattr(self, "weights_"):
            raise SchemaMismatchError("model is not initialized")

    def _snapshot(self) -> list[list[np.ndarray]]:
        return [
            [w.copy() for w in self.weights_],
            [b.copy() for b in self.biases_],
            [g.copy() for g in self.gammas_],
            [b.copy() for b in self.betas_],
            [m.copy() for m in self.running_means_],
            [v.copy() for v in self.running_vars_],
        ]

    def _restore(self, snapshot) -> None:
        (
            self.weights_,
            self.biases_,
            self.gammas_,
            self.betas_,
            self.running_means_,
            self.running_vars_,
        ) = [[a.copy() for a in group] for group in snapshot]

    # -- forward / backward ----------------------------------------------------

    def _forward(
        self,
        X: np.ndarray,
        training: bool,
        dropout_rng: np.random.Generator | None,
        update_running: bool,
    ):
        """Shared forward pass; returns probabilities and per-layer caches."""
        self._check_initialized()
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.layer_sizes_[0]:
            raise SchemaMismatchError(
                f"batch width must be {self.layer_sizes_[0]}, got {X.shape}"
            )
        if training and X.shape[0] < 2:
            raise BatchTooSmallError("training mode needs a batch of at least 2 rows")
        eps = self.bn_epsilon
        momentum = self.bn_momentum
        rate = self.dropout_rate if training else 0.0

        activation = X
        caches = []
        n_hidden = len(self.gammas_)
        for layer in range(n_hidden):
            z = activation @ self.weights_[layer] + self.biases_[layer]
            if training:
                mean = z.mean(axis=0)
                var = z.var(axis=0)
                if update_running:
                    self.running_means_[layer] += momentum * (mean - self.running_means_[layer])
                    self.running_vars_[layer] += momentum * (var - self.running_vars_[layer])
            else:
                mean = self.running_means_[layer]
                var = self.running_vars_[layer]
            std = np.sqrt(var + eps)
            centered = z - mean
            normalized = centered / std
            bn_out = self.gammas_[layer] * normalized + self.betas_[layer]
            hidden = np.maximum(bn_out, 0.0)
            relu_mask = bn_out > 0.0
            if rate > 0.0:
                if dropout_rng is None:
                    dropout_rng = np.random.default_rng(0)
                mask = (dropout_rng.random(hidden.shape) >= rate) / (1.0 - rate)
                dropped = hidden * mask
            else:
                mask = None
                dropped = hidden
            caches.append(
                {
                    "input": activation,
                    "z": z,
                    "centered": centered,
                    "std": std,
                    "normalized": normalized,
                    "bn_out": bn_out,
                    "relu_mask": relu_mask,
                    "hidden": hidden,
                    "dropout_mask": mask,
                    "dropped": dropped,
                }
            )
            activation = dropped
        z_out = activation @ self.weights_[-1] + self.biases_[-1]
        probabilities = np.clip(sigmoid(z_out[:, 0]), _PROB_FLOOR, 1.0 - _PROB_FLOOR)
        return probabilities, caches, activation

    def forward(self, X, training: bool = False, dropout_seed: int = 0) -> np.ndarray:
        """Probabilities for a batch. Training mode uses batch statistics and
        a seed-deterministic dropout mask; it does not touch running stats."""
        rng = np.random.default_rng(dropout_seed) if training else None
        probabilities, _, _ = self._forward(X, training, rng, update_running=False)
        return probabilities

    def forward_trace(self, X, training: bool = False, dropout_seed: int = 0) -> ForwardTrace:
        rng = np.random.default_rng(dropout_seed) if training else None
        probabilities, caches, _ = self._forward(X, training, rng, update_running=False)
        return ForwardTrace(
            pre_batchnorm=[c["z"] for c in caches],
            batch_normalized=[c["normalized"] for c in caches],
            post_activation=[c["hidden"] for c in caches],
            post_dropout=[c["dropped"] for c in caches],
            probabilities=probabilities,
        )

    def _backward(self, probabilities, caches, last_activation, y) -> Gradients:
        """Exact gradients of the mean batch loss, including the batch-norm
        backward pass through the batch statistics."""
        B = probabilities.shape[0]
        y = np.asarray(y, dtype=np.float64)
        delta = ((probabilities - y) / B)[:, None]

        weight_grads = [None] * len(self.weights_)
        bias_grads = [None] * len(self.biases_)
        gamma_grads = [None] * len(self.gammas_)
        beta_grads = [None] * len(self.betas_)

        weight_grads[-1] = last_activation.T @ delta
        bias_grads[-1] = delta.sum(axis=0)
        upstream = delta @ self.weights_[-1].T

        for layer in range(len(caches) - 1, -1, -1):
            cache = caches[layer]
            if cache["dropout_mask"] is not None:
                upstream = upstream * cache["dropout_mask"]
            d_bn_out = upstream * cache["relu_mask"]
            beta_grads[layer] = d_bn_out.sum(axis=0)
            gamma_grads[layer] = (d_bn_out * cache["normalized"]).sum(axis=0)
            d_normalized = d_bn_out * self.gammas_[layer]
            std = cache["std"]
            centered = cache["centered"]
            d_var = (d_normalized * centered).sum(axis=0) * (-0.5) * std**-3
            d_mean = -(d_normalized.sum(axis=0)) / std + d_var * (-2.0) * centered.mean(axis=0)
            dz = d_normalized / std + d_var * 2.0 * centered / B + d_mean / B
            weight_grads[layer] = cache["input"].T @ dz
            bias_grads[layer] = dz.sum(axis=0)
            if layer > 0:
                upstream = dz @ self.weights_[layer].T
        return Gradients(weight_grads, bias_grads, gamma_grads, beta_grads)

    def compute_gradients(self, X, y, dropout_rng=None) -> tuple[float, Gradients]:
        """Training-mode forward (running stats untouched) plus backward."""
        probabilities, caches, last = self._forward(
            X, training=True, dropout_rng=dropout_rng, update_running=False
        )
        loss = float(np.mean(binary_cross_entropy(probabilities, y)))
        gradients = self._backward(probabilities, caches, last, y)
        if not gradients.all_finite():
            raise NumericDivergenceError("non-finite gradient")
        return loss, gradients

    def apply_gradients(self, gradients: Gradients, learning_rate: float) -> "MlpClassifier":
        """One SGD step: parameter <- parameter - lr * gradient."""
        for w, g in zip(self.weights_, gradients.weights):
            w -= learning_rate * g
        for b, g in zip(self.biases_, gradients.biases):
            b -= learning_rate * g
        for gamma, g in zip(self.gammas_, gradients.gammas):
            gamma -= learning_rate * g
        for beta, g in zip(self.betas_, gradients.betas):
            beta -= learning_rate * g
        return self

    def _parameters_finite(self) -> bool:
        arrays = [
            *self.weights_,
            *self.biases_,
            *self.gammas_,
            *self.betas_,
            *self.running_means_,
            *self.running_vars_,
        ]
        return all(np.all(np.isfinite(a)) for a in arrays)

    # -- training ---------------------------------------------------------------

    def fit(self, X, y, X_val=None, y_val=None):
        config = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            dropout_rate=self.dropout_rate,
            validation_fraction=self.validation_fraction,
            seed=self.seed,
        ).validate()
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise SchemaMismatchError("X and y must align")
        if X_val is None or y_val is None:
            X, y, X_val, y_val = _holdout_split(X, y, config.validation_fraction, config.seed)
        X_val = np.asarray(X_val, dtype=np.float64)
        y_val = np.asarray(y_val, dtype=np.float64).ravel()
        if X_val.shape[0] == 0:
            raise InsufficientSamplesError("validation set must be non-empty")
        if X.shape[0] < 2:
            raise InsufficientSamplesError("training set needs at least 2 rows")

        self.initialize(X.shape[1])
        rng = np.random.default_rng(config.seed)
        history = TrainingHistory()
        best_accuracy = -1.0
        best_snapshot = self._snapshot()

        n = X.shape[0]
        for epoch in range(1, config.epochs + 1):
            started = time.perf_counter()
            order = rng.permutation(n)
            loss_sum = 0.0
            correct = 0
            seen = 0
            for start in range(0, n, config.batch_size):
                batch_idx = order[start : start + config.batch_size]
                if batch_idx.shape[0] < 2:
                    continue  # final short batch too small for batch statistics
                xb = X[batch_idx]
                yb = y[batch_idx]
                probabilities, caches, last = self._forward(
                    xb, training=True, dropout_rng=rng, update_running=True
                )
                loss = float(np.mean(binary_cross_entropy(probabilities, yb)))
                gradients = self._backward(probabilities, caches, last, yb)
                if not gradients.all_finite():
                    raise NumericDivergenceError("non-finite gradient", history=history)
                self.apply_gradients(gradients, config.learning_rate)
                loss_sum += loss * batch_idx.shape[0]
                correct += int(np.sum((probabilities >= 0.5) == (yb >= 0.5)))
                seen += batch_idx.shape[0]
            if seen == 0:
                raise InsufficientSamplesError("no trainable batch (all batches under 2 rows)")
            if not self._parameters_finite():
                raise NumericDivergenceError("non-finite parameter", history=history)
            val_probabilities = self.predict_proba(X_val)
            val_accuracy = float(np.mean((val_probabilities >= 0.5) == (y_val >= 0.5)))
            history.records.append(
                EpochRecord(
                    epoch=epoch,
                    train_loss=loss_sum / seen,
                    train_accuracy=correct / seen,
                    validation_accuracy=val_accuracy,
                    seconds=time.perf_counter() - started,
                )
            )
            if val_accuracy > best_accuracy:
                best_accuracy = val_accuracy
                best_snapshot = self._snapshot()

        self._restore(best_snapshot)
        self.history_ = history
        self.best_validation_accuracy_ = best_accuracy
        return self

    # -- inference -------------------------------------------------------------

    def predict_proba(self, X) -> np.ndarray:
        """Deterministic inference probabilities (running stats, no dropout)."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X.reshape(1, -1)
        probabilities, _, _ = self._forward(X, training=False, dropout_rng=None, update_running=False)
        return probabilities[0] if single else probabilities

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int64)


def _holdout_split(X, y, fraction, seed):
    """Stratified holdout used when fit() is called without a validation set."""
    import math

    rng = np.random.default_rng(seed)
    train_parts, val_parts = [], []
    for label in (0, 1):
        members = np.flatnonzero(y == label)
        if members.size == 0:
            continue
        shuffled = rng.permutation(members)
        k = math.ceil(fraction * members.size)
        val_parts.append(shuffled[:k])
        train_parts.append(shuffled[k:])
    train_idx = np.concatenate(train_parts) if train_parts else np.empty(0, dtype=np.int64)
    val_idx = np.concatenate(val_parts) if val_parts else np.empty(0, dtype=np.int64)
    return X[train_idx], y[train_idx], X[val_idx], y[val_idx]
