"""Built-in binary classifiers and the black-box prediction handle.

The MLP is implemented from scratch (dense layers, rectifier activations,
logistic output, Adam updates, manual backpropagation) so its gradients can
be audited against finite differences. Logistic regression reuses the same
training loop with no hidden layers. Fitted models are wrapped behind a
``TabularModel`` handle that accepts raw rows and returns (label, confidence)
pairs, which is all the probing stages are allowed to see.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_X_y

from .errors import SchemaError, SingleClassDataset
from .schema import Dataset, Row, Schema, encode_dataset, encode_rows

MODEL_FORMAT = "limi-model/1"


class Prediction(NamedTuple):
    """Predicted label plus the confidence of that label (always in [0.5, 1])."""

    label: int
    score: float


@dataclass(frozen=True)
class MlpConfig:
    """Training recipe for the built-in fully-connected network.

    Five hidden layers by default (six weight layers overall). ``epochs``
    defaults to a desk-scale 100; pass 1000 to reproduce the full recipe.
    """

    hidden_sizes: tuple[int, ...] = (64, 32, 16, 8, 4)
    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.hidden_sizes) < 1:
            raise ValueError("at least one hidden layer is required")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


def _sigmoid(s: np.ndarray) -> np.ndarray:
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class _DenseNet:
    """Plain dense network: relu hidden layers, single logistic output unit."""

    def __init__(self, layer_sizes: list[int], seed: int) -> None:
        # Glorot-uniform init keeps the stack's gain near 1, so the fitted
        # function stays sane far outside the training support
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def logits(self, X: np.ndarray) -> np.ndarray:
        a = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = np.maximum(z, 0.0) if i < last else z
        return a[:, 0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.logits(X))

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        """Mean binary cross-entropy and its gradients w.r.t. every parameter."""
        n = X.shape[0]
        activations = [X]
        pre = []
        a = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            pre.append(z)
            a = np.maximum(z, 0.0) if i < last else z
            activations.append(a)

        s = pre[-1][:, 0]
        # log(1 + exp(s)) - y*s, computed stably
        loss = float(np.mean(np.maximum(s, 0.0) - s * y + np.log1p(np.exp(-np.abs(s)))))

        delta = ((_sigmoid(s) - y) / n)[:, None]
        grad_w = [np.empty(0)] * len(self.weights)
        grad_b = [np.empty(0)] * len(self.biases)
        for i in range(last, -1, -1):
            grad_w[i] = activations[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0.0)
        return loss, grad_w, grad_b

    def parameter_bytes(self) -> bytes:
        chunks = []
        for W, b in zip(self.weights, self.biases):
            chunks.append(W.tobytes())
            chunks.append(b.tobytes())
        return b"".join(chunks)


def _train_net(net: _DenseNet, X, y, lr, epochs, batch_size, seed) -> None:
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    m_w = [np.zeros_like(W) for W in net.weights]
    v_w = [np.zeros_like(W) for W in net.weights]
    m_b = [np.zeros_like(b) for b in net.biases]
    v_b = [np.zeros_like(b) for b in net.biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    t = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            _, grad_w, grad_b = net.loss_and_grads(X[batch], y[batch])
            t += 1
            c1 = 1.0 - beta1**t
            c2 = 1.0 - beta2**t
            for i in range(len(net.weights)):
                m_w[i] = beta1 * m_w[i] + (1 - beta1) * grad_w[i]
                v_w[i] = beta2 * v_w[i] + (1 - beta2) * grad_w[i] ** 2
                net.weights[i] -= lr * (m_w[i] / c1) / (np.sqrt(v_w[i] / c2) + eps)
                m_b[i] = beta1 * m_b[i] + (1 - beta1) * grad_b[i]
                v_b[i] = beta2 * v_b[i] + (1 - beta2) * grad_b[i] ** 2
                net.biases[i] -= lr * (m_b[i] / c1) / (np.sqrt(v_b[i] / c2) + eps)


class MlpClassifier(BaseEstimator):
    """Fully-connected binary classifier trained by Adam with manual backprop."""

    def __init__(self, hidden_sizes=(64, 32, 16, 8, 4), learning_rate=0.001,
                 epochs=100, batch_size=128, seed=0):
        self.hidden_sizes = hidden_sizes
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def _layer_sizes(self, n_features: int) -> list[int]:
        if len(self.hidden_sizes) < 1:
            raise ValueError("at least one hidden layer is required")
        return [n_features, *self.hidden_sizes, 1]

    def fit(self, X, y) -> "MlpClassifier":
        X, y = check_X_y(X, y)
        if len(np.unique(y)) < 2:
            raise SingleClassDataset("training labels contain a single class")
        y = y.astype(np.float64)
        net = _DenseNet(self._layer_sizes(X.shape[1]), self.seed)
        _train_net(net, X, y, self.learning_rate, self.epochs, self.batch_size, self.seed)
        self.net_ = net
        self.n_features_in_ = X.shape[1]
        self.train_accuracy_ = float(np.mean((net.predict_proba(X) >= 0.5) == y))
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_array(X)
        return self.net_.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


class LogisticClassifier(MlpClassifier):
    """Single logistic unit trained with the same Adam loop (no hidden layers)."""

    def __init__(self, learning_rate=0.01, epochs=100, batch_size=128, seed=0):
        super().__init__(hidden_sizes=(), learning_rate=learning_rate,
                         epochs=epochs, batch_size=batch_size, seed=seed)

    def _layer_sizes(self, n_features: int) -> list[int]:
        return [n_features, 1]


class TabularModel:
    """Black-box handle: raw rows in, (label, confidence) out.

    ``favorable_label`` orients the probability axis: the wrapped network
    scores class 1, and the handle reports the favorable-class probability.
    A probability of exactly 0.5 resolves to the favorable label.
    """

    def __init__(self, schema: Schema, estimator, kind: str = "mlp") -> None:
        self.schema = schema
        self.estimator = estimator
        self.kind = kind

    @property
    def n_features(self) -> int:
        return self.schema.n_columns

    def predict_batch(self, rows: list[Row]) -> tuple[np.ndarray, np.ndarray]:
        X = encode_rows(self.schema, rows)
        p1 = self.estimator.net_.predict_proba(X)
        fav = self.schema.favorable_label
        p_fav = p1 if fav == 1 else 1.0 - p1
        favorable = p_fav >= 0.5
        labels = np.where(favorable, fav, 1 - fav).astype(np.int64)
        scores = np.where(favorable, p_fav, 1.0 - p_fav)
        return labels, scores

    def predict(self, row: Row) -> Prediction:
        labels, scores = self.predict_batch([row])
        return Prediction(int(labels[0]), float(scores[0]))

    def accuracy(self, dataset: Dataset) -> float:
        labels, _ = self.predict_batch(dataset.rows)
        return float(np.mean(labels == dataset.labels))

    def parameter_hash(self) -> bytes:
        return self.estimator.net_.parameter_bytes()

    def to_dict(self) -> dict:
        net = self.estimator.net_
        return {
            "format": MODEL_FORMAT,
            "kind": self.kind,
            "schema": self.schema.to_dict(),
            "layers": [
                {
                    "shape": list(W.shape),
                    "weights": W.reshape(-1).tolist(),  # row-major
                    "bias": b.tolist(),
                }
                for W, b in zip(net.weights, net.biases)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TabularModel":
        if doc.get("format") != MODEL_FORMAT:
            raise SchemaError(f"unsupported model format {doc.get('format')!r}")
        schema = Schema.from_dict(doc["schema"])
        layers = doc["layers"]
        sizes = [layers[0]["shape"][0]] + [layer["shape"][1] for layer in layers]
        hidden = tuple(sizes[1:-1])
        estimator = (MlpClassifier(hidden_sizes=hidden) if hidden
                     else LogisticClassifier())
        net = _DenseNet(sizes, seed=0)
        net.weights = [
            np.asarray(layer["weights"], dtype=np.float64).reshape(layer["shape"])
            for layer in layers
        ]
        net.biases = [np.asarray(layer["bias"], dtype=np.float64) for layer in layers]
        estimator.net_ = net
        estimator.n_features_in_ = sizes[0]
        return cls(schema, estimator, kind=doc.get("kind", "mlp"))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path: str) -> "TabularModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def predict(model, row: Row) -> Prediction:
    """Predict one row through any classifier handle."""
    return model.predict(row)


def train_mlp(dataset: Dataset, cfg: MlpConfig = MlpConfig()) -> TabularModel:
    X, y = encode_dataset(dataset)
    est = MlpClassifier(
        hidden_sizes=cfg.hidden_sizes,
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
    ).fit(X, y)
    return TabularModel(dataset.schema, est, kind="mlp")


def train_logreg(dataset: Dataset, epochs: int = 100, lr: float = 0.01,
                 seed: int = 0) -> TabularModel:
    X, y = encode_dataset(dataset)
    est = LogisticClassifier(learning_rate=lr, epochs=epochs, seed=seed).fit(X, y)
    return TabularModel(dataset.schema, est, kind="logreg")


def retrain(base: Dataset, augment: Dataset | None, cfg: MlpConfig = MlpConfig()) -> TabularModel:
    """Train a fresh model on base plus augmentation rows (may be empty)."""
    combined = base if augment is None or len(augment) == 0 else base.concat(augment)
    return train_mlp(combined, cfg)
