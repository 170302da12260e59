"""Softmax sentiment head over sentence embeddings.

Three fixed classes (positive, negative, neutral) trained with
cross-entropy and Adam plus decoupled weight decay.  This stands in
for full encoder fine-tuning: the embeddings stay frozen and only the
linear head learns.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .autoencoder import AdamState, adam_step
from .embeddings import EmbeddingMatrix
from .metrics import (
    ConfusionCounts,
    accuracy,
    per_class_accuracy,
    weighted_f1,
)

CLASSES = ("positive", "negative", "neutral")


class SentimentError(ValueError):
    """Raised for invalid labels, data, or training failures."""


@dataclass(frozen=True)
class SentimentTrainConfig:
    epochs: int = 10
    batch_size: int | None = 32
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise SentimentError("epochs must be at least 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise SentimentError("batch_size must be at least 1 (or None for full batch)")
        if not self.learning_rate > 0:
            raise SentimentError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise SentimentError("weight_decay must be nonnegative")


@dataclass
class LabeledSet:
    embeddings: EmbeddingMatrix
    labels: list[str]

    def __post_init__(self):
        if len(self.labels) != len(self.embeddings):
            raise SentimentError(
                f"{len(self.labels)} labels for {len(self.embeddings)} embedding rows"
            )
        bad = sorted({l for l in self.labels if l not in CLASSES})
        if bad:
            raise SentimentError(f"labels outside {CLASSES}: {bad}")

    def present_classes(self) -> list[str]:
        present = set(self.labels)
        return [c for c in CLASSES if c in present]


@dataclass
class SentimentModel:
    """Linear map d -> 3 plus softmax; class order fixed as CLASSES."""

    weights: np.ndarray
    bias: np.ndarray
    loss_history: list[float]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[1] != len(CLASSES):
            raise SentimentError("weights must be d x 3")
        if self.bias.shape != (len(CLASSES),):
            raise SentimentError("bias must have 3 entries")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise SentimentError("non-finite model parameters")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def save(self, path) -> None:
        payload = {
            "classes": list(CLASSES),
            "dim": self.dim,
            "weights": [float(x) for x in self.weights.ravel()],
            "bias": [float(x) for x in self.bias],
            "loss_history": self.loss_history,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SentimentModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if tuple(payload.get("classes", ())) != CLASSES:
            raise SentimentError(f"{path}: unexpected class order")
        d = int(payload["dim"])
        return cls(
            weights=np.array(payload["weights"], dtype=np.float64).reshape(d, 3),
            bias=np.array(payload["bias"], dtype=np.float64),
            loss_history=[float(x) for x in payload.get("loss_history", [])],
        )


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _cross_entropy(x, y_idx, weights, bias) -> float:
    probs = _softmax_rows(x @ weights + bias)
    picked = probs[np.arange(x.shape[0]), y_idx]
    return float(-np.log(np.maximum(picked, 1e-300)).mean())


def train_classifier(data: LabeledSet, config: SentimentTrainConfig) -> SentimentModel:
    """Minimize cross-entropy with Adam and decoupled weight decay.

    Weights start at zero (the problem is convex, so no symmetry
    breaking is needed) and shuffling is driven by the config seed.
    The loss history records the full-data loss before training and
    after each epoch.
    """
    if len(data.present_classes()) < 2:
        raise SentimentError("training needs at least 2 classes present")
    x = data.embeddings.data.astype(np.float64)
    n, d = x.shape
    y_idx = np.array([CLASSES.index(l) for l in data.labels], dtype=np.int64)

    params = {"weights": np.zeros((d, 3)), "bias": np.zeros(3)}
    state = AdamState.for_params(params, epsilon=config.epsilon)
    rng = np.random.default_rng(config.seed)
    batch = config.batch_size if config.batch_size is not None else n
    onehot = np.zeros((n, 3))
    onehot[np.arange(n), y_idx] = 1.0

    history = [_cross_entropy(x, y_idx, params["weights"], params["bias"])]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            rows = order[start : start + batch]
            xb, yb = x[rows], onehot[rows]
            probs = _softmax_rows(xb @ params["weights"] + params["bias"])
            g_logits = (probs - yb) / rows.size
            grads = {
                "weights": xb.T @ g_logits,
                "bias": g_logits.sum(axis=0),
            }
            adam_step(params, grads, state, config.learning_rate)
            if config.weight_decay:
                params["weights"] -= (
                    config.learning_rate * config.weight_decay * params["weights"]
                )
        loss = _cross_entropy(x, y_idx, params["weights"], params["bias"])
        if not np.isfinite(loss):
            raise SentimentError("training loss became non-finite; aborting")
        history.append(loss)

    return SentimentModel(
        weights=params["weights"], bias=params["bias"], loss_history=history
    )


def predict(model: SentimentModel, embeddings) -> tuple[list[str], np.ndarray]:
    """Class labels and softmax probabilities, ties to the lowest index."""
    x = embeddings.data if isinstance(embeddings, EmbeddingMatrix) else embeddings
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise SentimentError(
            f"embeddings must be n x {model.dim}, got {x.shape}"
        )
    probs = _softmax_rows(x @ model.weights + model.bias)
    labels = [CLASSES[i] for i in probs.argmax(axis=1)]
    return labels, probs


@dataclass
class EvalReport:
    confusion: ConfusionCounts
    accuracy: float
    per_class_accuracy: dict[str, float]
    weighted_f1: float


def evaluate(model: SentimentModel, data: LabeledSet) -> EvalReport:
    predicted, _ = predict(model, data.embeddings)
    counts = ConfusionCounts.from_labels(data.labels, predicted, classes=CLASSES)
    return EvalReport(
        confusion=counts,
        accuracy=accuracy(counts),
        per_class_accuracy=per_class_accuracy(data.labels, predicted),
        weighted_f1=weighted_f1(counts),
    )


def gradient_check(model: SentimentModel, sample, label: str, h: float = 1e-5) -> float:
    """Analytic vs central-difference gradients of one-row cross-entropy."""
    if label not in CLASSES:
        raise SentimentError(f"unknown label {label!r}")
    x = np.asarray(sample, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != model.dim:
        raise SentimentError("sample dimension does not match model")
    y_idx = np.array([CLASSES.index(label)])
    onehot = np.zeros((1, 3))
    onehot[0, y_idx[0]] = 1.0

    params = {"weights": model.weights.copy(), "bias": model.bias.copy()}
    probs = _softmax_rows(x @ params["weights"] + params["bias"])
    g_logits = probs - onehot
    analytic = {"weights": x.T @ g_logits, "bias": g_logits.sum(axis=0)}

    worst = 0.0
    for key, p in params.items():
        flat = p.ravel()
        g_flat = analytic[key].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = _cross_entropy(x, y_idx, params["weights"], params["bias"])
            flat[i] = orig - h
            minus = _cross_entropy(x, y_idx, params["weights"], params["bias"])
            flat[i] = orig
            numeric = (plus - minus) / (2.0 * h)
            denom = max(abs(g_flat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(g_flat[i] - numeric) / denom)
    return worst


def read_labels_csv(path) -> dict[str, str]:
    """id,label rows to a mapping; duplicate ids rejected."""
    labels: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "label"} <= set(reader.fieldnames):
            raise SentimentError(f"{path}: expected a CSV header with id,label")
        for lineno, row in enumerate(reader, start=2):
            doc_id, label = row.get("id"), row.get("label")
            if doc_id is None or label is None:
                raise SentimentError(f"{path}:{lineno}: missing id or label")
            if doc_id in labels:
                raise SentimentError(f"{path}: duplicate id {doc_id!r}")
            labels[doc_id] = label
    return labels


def read_label_map(path) -> dict[str, str]:
    """JSON object mapping raw labels to the three canonical classes."""
    with open(path, encoding="utf-8") as fh:
        mapping = json.load(fh)
    if not isinstance(mapping, dict):
        raise SentimentError(f"{path}: label map must be a JSON object")
    bad = sorted({v for v in mapping.values() if v not in CLASSES})
    if bad:
        raise SentimentError(f"{path}: mapped values outside {CLASSES}: {bad}")
    return {str(k): str(v) for k, v in mapping.items()}


def apply_label_map(labels: dict[str, str], mapping: dict[str, str] | None) -> dict[str, str]:
    if mapping is None:
        mapped = dict(labels)
    else:
        mapped = {k: mapping.get(v, v) for k, v in labels.items()}
    bad = sorted({v for v in mapped.values() if v not in CLASSES})
    if bad:
        raise SentimentError(
            f"labels outside {CLASSES} after mapping: {bad}; supply a label map"
        )
    return mapped


def labeled_set_for(matrix: EmbeddingMatrix, labels_by_id: dict[str, str]) -> LabeledSet:
    """Rows of the matrix that have labels, in matrix order."""
    keep = [i for i, doc_id in enumerate(matrix.ids) if doc_id in labels_by_id]
    if not keep:
        raise SentimentError("no embedding ids carry labels")
    sub = EmbeddingMatrix(
        ids=[matrix.ids[i] for i in keep], data=matrix.data[keep]
    )
    return LabeledSet(
        embeddings=sub, labels=[labels_by_id[matrix.ids[i]] for i in keep]
    )
