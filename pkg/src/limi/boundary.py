"""Surrogate decision boundary in latent space.

The target model's decisions are projected into the generator's latent space
by decoding random latents and recording the predicted labels. A linear SVM
(Pegasos-style stochastic subgradient descent on the regularised hinge loss)
fit on the confidence-filtered, class-balanced latent dataset yields a
hyperplane w'z + b = 0 that coarsely imitates the model's boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_X_y

from . import runtime
from .errors import BoundaryUnlearnable, OneClassSample
from .generator import sample_latents


@dataclass(frozen=True)
class SurrogateBoundary:
    """Linear hyperplane w'z + b = 0 with cached norm."""

    w: np.ndarray
    b: float

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=np.float64)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))
        norm = float(np.linalg.norm(w))
        if norm <= 0.0:
            raise ValueError("boundary normal vector must be non-zero")
        object.__setattr__(self, "norm", norm)

    def unit(self) -> tuple[np.ndarray, float]:
        """Normalised (w_u, b_u) so that w_u'z + b_u is a signed distance."""
        return self.w / self.norm, self.b / self.norm

    def distance(self, z: np.ndarray):
        """Signed euclidean distance from z (vector or batch) to the plane."""
        z = np.asarray(z, dtype=np.float64)
        return (z @ self.w + self.b) / self.norm

    def to_dict(self) -> dict:
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_dict(cls, doc: dict) -> "SurrogateBoundary":
        return cls(np.asarray(doc["w"], dtype=np.float64), float(doc["b"]))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path: str) -> "SurrogateBoundary":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def distance(boundary: SurrogateBoundary, z: np.ndarray):
    return boundary.distance(z)


@dataclass(frozen=True)
class AuxConfig:
    """Settings for auxiliary latent dataset construction.

    Desk-scale defaults; the full-scale recipe uses n_init=1_000_000 and
    per_class=50_000.
    """

    n_init: int = 100_000
    epsilon: float = 0.7
    per_class: int = 5_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.5 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0.5, 1)")
        if self.per_class < 1:
            raise ValueError("per_class must be >= 1")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")


@dataclass(frozen=True)
class AuxDataset:
    """Latent vectors labelled by the target model, balanced per class."""

    latents: np.ndarray
    labels: np.ndarray


_CHUNK = 16_384


def _predict_chunk(task) -> tuple[np.ndarray, np.ndarray]:
    gen, model, Z = task
    rows = gen.decode_batch(Z)
    return model.predict_batch(rows)


def label_latents(gen, model, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decode latents and predict the rows; returns (labels, scores)."""
    tasks = [(gen, model, Z[i:i + _CHUNK]) for i in range(0, len(Z), _CHUNK)]
    parts = runtime.parallel_map(_predict_chunk, tasks)
    labels = np.concatenate([p[0] for p in parts])
    scores = np.concatenate([p[1] for p in parts])
    return labels, scores


def build_aux(gen, model, cfg: AuxConfig = AuxConfig()) -> AuxDataset:
    """Construct the balanced, confidence-filtered auxiliary latent dataset.

    Samples ``n_init`` latents, labels them through decode+predict, keeps
    predictions with confidence >= epsilon sorted by confidence, then
    resamples both classes to exactly ``per_class`` samples: an over-full
    class is subsampled at random (keeping it representative of the whole
    confident cloud), an under-full one is replicated at random.

    Raises BoundaryUnlearnable when the filter empties one class.
    """
    Z = sample_latents(cfg.n_init, gen.latent_dim,
                       runtime.stage_seed(cfg.seed, runtime.AUX_LATENTS))
    labels, scores = label_latents(gen, model, Z)

    order = np.argsort(-scores, kind="stable")
    order = order[scores[order] >= cfg.epsilon]
    idx0 = order[labels[order] == 0]
    idx1 = order[labels[order] == 1]
    if len(idx0) == 0 or len(idx1) == 0:
        raise BoundaryUnlearnable(len(idx0), len(idx1))

    rng = np.random.default_rng(runtime.stage_seed(cfg.seed, runtime.AUX_BALANCE))

    def balance(idx: np.ndarray) -> np.ndarray:
        if len(idx) >= cfg.per_class:
            # random subsample, not top-confidence truncation: keeping only the
            # most confident members of a large class pulls the margin midpoint
            # deep into that class's territory and off the model's transition band
            return rng.choice(idx, size=cfg.per_class, replace=False)
        extra = rng.choice(idx, size=cfg.per_class - len(idx), replace=True)
        return np.concatenate([idx, extra])

    idx0 = balance(idx0)
    idx1 = balance(idx1)
    keep = np.concatenate([idx0, idx1])
    out_labels = np.concatenate([
        np.zeros(cfg.per_class, dtype=np.int64),
        np.ones(cfg.per_class, dtype=np.int64),
    ])
    return AuxDataset(Z[keep], out_labels)


@dataclass(frozen=True)
class SvmConfig:
    reg: float = 1e-4
    epochs: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reg <= 0:
            raise ValueError("reg must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


class PegasosSVC(BaseEstimator):
    """Linear SVM via stochastic subgradient descent with step size 1/(reg*t).

    Minimises reg/2*||w||^2 + mean hinge loss; the bias is unregularised.
    ``objective_trace_`` records the objective after each epoch.
    """

    def __init__(self, reg: float = 1e-4, epochs: int = 20, seed: int = 0) -> None:
        self.reg = reg
        self.epochs = epochs
        self.seed = seed

    def fit(self, X, y) -> "PegasosSVC":
        X, y = check_X_y(X, y)
        classes = np.unique(y)
        if len(classes) < 2:
            raise OneClassSample("both classes must be present to fit a boundary")
        ysign = np.where(y == classes.max(), 1.0, -1.0)

        rng = np.random.default_rng(self.seed)
        n, d = X.shape
        w = np.zeros(d)
        b = 0.0
        t = 0
        trace = []
        for _ in range(self.epochs):
            for i in rng.permutation(n):
                t += 1
                eta = 1.0 / (self.reg * t)
                margin = ysign[i] * (X[i] @ w + b)
                w *= 1.0 - eta * self.reg
                if margin < 1.0:
                    w += eta * ysign[i] * X[i]
                    b += eta * ysign[i]
            trace.append(self._objective(X, ysign, w, b))
        self.w_ = w
        self.b_ = b
        self.objective_trace_ = trace
        return self

    def _objective(self, X, ysign, w, b) -> float:
        hinge = np.maximum(0.0, 1.0 - ysign * (X @ w + b))
        return float(0.5 * self.reg * w @ w + hinge.mean())

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w_ + self.b_

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0.0).astype(np.int64)


def fit_boundary(aux: AuxDataset, cfg: SvmConfig = SvmConfig()) -> SurrogateBoundary:
    """Fit the linear surrogate boundary on an auxiliary latent dataset."""
    svc = PegasosSVC(reg=cfg.reg, epochs=cfg.epochs, seed=cfg.seed)
    svc.fit(aux.latents, aux.labels)
    return SurrogateBoundary(svc.w_, svc.b_)


def boundary_auc(boundary: SurrogateBoundary, latents: np.ndarray,
                 labels: np.ndarray) -> float:
    """Rank-sum AUC of the signed distance as a score for class 1 (ties count 0.5)."""
    labels = np.asarray(labels)
    n1 = int((labels == 1).sum())
    n0 = int((labels == 0).sum())
    if n1 == 0 or n0 == 0:
        raise OneClassSample("AUC needs both classes")
    scores = boundary.distance(latents)
    ranks = rankdata(scores, method="average")
    return float((ranks[labels == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))
