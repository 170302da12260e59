"""Evaluation measures: F1, accuracy, silhouette, and topic coherence.

Classification metrics operate on a confusion matrix; clustering quality
uses the silhouette score; topic quality is scored with UMass coherence
and a C_V-style measure built on NPMI context vectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class MetricsError(ValueError):
    """Raised when a metric's preconditions are not met."""


@dataclass(frozen=True)
class ConfusionCounts:
    """Confusion matrix with rows as true classes, columns as predicted."""

    classes: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise MetricsError("confusion matrix must be square")
        if m.shape[0] != len(self.classes):
            raise MetricsError("class list does not match matrix size")
        if len(set(self.classes)) != len(self.classes):
            raise MetricsError("duplicate class names")
        if (m < 0).any():
            raise MetricsError("confusion counts must be nonnegative")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_labels(
        cls, labels: list[str], predictions: list[str], classes=None
    ) -> "ConfusionCounts":
        if len(labels) != len(predictions):
            raise MetricsError("labels and predictions differ in length")
        if classes is None:
            classes = sorted(set(labels) | set(predictions))
        classes = tuple(classes)
        index = {c: i for i, c in enumerate(classes)}
        m = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for true, pred in zip(labels, predictions):
            m[index[true], index[pred]] += 1
        return cls(classes=classes, matrix=m)

    @classmethod
    def from_binary(
        cls,
        tp: int,
        fp: int,
        fn: int,
        tn: int,
        positive: str = "positive",
        negative: str = "negative",
    ) -> "ConfusionCounts":
        return cls(
            classes=(positive, negative),
            matrix=np.array([[tp, fn], [fp, tn]], dtype=np.int64),
        )

    def _idx(self, cls_name: str) -> int:
        try:
            return self.classes.index(cls_name)
        except ValueError:
            raise MetricsError(f"unknown class {cls_name!r}") from None

    def tp(self, cls_name: str) -> int:
        i = self._idx(cls_name)
        return int(self.matrix[i, i])

    def fp(self, cls_name: str) -> int:
        i = self._idx(cls_name)
        return int(self.matrix[:, i].sum() - self.matrix[i, i])

    def fn(self, cls_name: str) -> int:
        i = self._idx(cls_name)
        return int(self.matrix[i, :].sum() - self.matrix[i, i])

    def tn(self, cls_name: str) -> int:
        return self.total - self.tp(cls_name) - self.fp(cls_name) - self.fn(cls_name)

    def support(self, cls_name: str) -> int:
        return int(self.matrix[self._idx(cls_name), :].sum())

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.matrix))


def f1_score(counts: ConfusionCounts, cls_name: str) -> float:
    """Harmonic mean of precision and recall for one class.

    Degenerate cases (no predicted positives, no true positives, or
    precision + recall = 0) return 0.
    """
    tp, fp, fn = counts.tp(cls_name), counts.fp(cls_name), counts.fn(cls_name)
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def accuracy(counts: ConfusionCounts, cls_name: str | None = None) -> float:
    """Fraction of correct decisions.

    Without a class argument this is overall accuracy (trace over
    total).  With one, it is the per-class (TP+TN)/(TP+TN+FP+FN) view,
    which coincides with the overall value in the binary case.
    """
    if counts.total == 0:
        raise MetricsError("accuracy undefined for zero total")
    if cls_name is None:
        return counts.correct / counts.total
    return (counts.tp(cls_name) + counts.tn(cls_name)) / counts.total


def per_class_accuracy(labels: list[str], predictions: list[str]) -> dict[str, float]:
    """Per class: fraction of its true examples predicted as that class.

    Classes absent from the true labels get no entry.
    """
    if len(labels) != len(predictions):
        raise MetricsError("labels and predictions differ in length")
    totals: dict[str, int] = {}
    hits: dict[str, int] = {}
    for true, pred in zip(labels, predictions):
        totals[true] = totals.get(true, 0) + 1
        if true == pred:
            hits[true] = hits.get(true, 0) + 1
    return {c: hits.get(c, 0) / n for c, n in sorted(totals.items())}


def weighted_f1(counts: ConfusionCounts) -> float:
    """Class-support-weighted mean of per-class F1."""
    total = counts.total
    if total == 0:
        raise MetricsError("weighted F1 undefined for zero total")
    return sum(
        counts.support(c) / total * f1_score(counts, c) for c in counts.classes
    )


def silhouette(data, assignments) -> float:
    """Mean silhouette score over all points.

    Per point, s = (b - a)/max(a, b) where a is the mean distance to
    the rest of its own cluster and b the smallest mean distance to
    another cluster.  Members of singleton clusters score 0.
    """
    x = np.asarray(data, dtype=np.float64)
    labels = np.asarray(assignments)
    if x.ndim != 2:
        raise MetricsError("data must be a 2-D matrix")
    n = x.shape[0]
    if labels.shape != (n,):
        raise MetricsError("assignments length does not match data rows")
    if n < 2:
        raise MetricsError("silhouette needs at least 2 points")
    uniq, inv = np.unique(labels, return_inverse=True)
    num_clusters = len(uniq)
    if num_clusters < 2:
        raise MetricsError("silhouette needs at least 2 clusters")

    # differences computed directly: the sum-of-squares expansion loses
    # digits to cancellation for near-coincident points
    dists = np.empty((n, n))
    for i in range(n):
        dists[i] = np.sqrt(((x - x[i]) ** 2).sum(axis=1))

    onehot = np.zeros((n, num_clusters))
    onehot[np.arange(n), inv] = 1.0
    sums = dists @ onehot
    sizes = onehot.sum(axis=0)

    own = inv
    own_size = sizes[own]
    scores = np.zeros(n)
    multi = own_size > 1
    a = np.zeros(n)
    a[multi] = sums[multi, own[multi]] / (own_size[multi] - 1.0)

    mean_other = sums / sizes[None, :]
    mean_other[np.arange(n), own] = np.inf
    b = mean_other.min(axis=1)

    denom = np.maximum(a, b)
    valid = multi & (denom > 0)
    scores[valid] = (b[valid] - a[valid]) / denom[valid]
    return float(scores.mean())


@dataclass
class CooccurrenceStats:
    """Document and sliding-window co-occurrence counts for coherence.

    Pair counts are symmetric and keyed by the sorted term pair.  When a
    relevant-term set is supplied, only those terms are counted, which
    keeps the pair tables small for large corpora.
    """

    num_docs: int
    num_windows: int
    window_size: int
    doc_freq: dict[str, int] = field(default_factory=dict)
    co_doc_freq: dict[tuple[str, str], int] = field(default_factory=dict)
    window_freq: dict[str, int] = field(default_factory=dict)
    co_window_freq: dict[tuple[str, str], int] = field(default_factory=dict)

    @classmethod
    def from_documents(
        cls,
        docs: list[list[str]],
        window_size: int = 110,
        relevant: set[str] | None = None,
    ) -> "CooccurrenceStats":
        if window_size < 1:
            raise MetricsError("window_size must be at least 1")
        stats = cls(
            num_docs=len(docs), num_windows=0, window_size=window_size
        )
        for tokens in docs:
            kept = [t for t in tokens if relevant is None or t in relevant]
            present = sorted(set(kept))
            _count_group(present, stats.doc_freq, stats.co_doc_freq)
            stats.num_windows += _count_windows(
                tokens, window_size, relevant, stats.window_freq, stats.co_window_freq
            )
        return stats

    def doc_pair(self, a: str, b: str) -> int:
        return self.co_doc_freq.get(_pair_key(a, b), 0)

    def window_pair(self, a: str, b: str) -> int:
        return self.co_window_freq.get(_pair_key(a, b), 0)


def _pair_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def _count_group(present: list[str], freq: dict, co_freq: dict) -> None:
    for i, a in enumerate(present):
        freq[a] = freq.get(a, 0) + 1
        for b in present[i + 1 :]:
            key = (a, b)
            co_freq[key] = co_freq.get(key, 0) + 1


def _count_windows(tokens, window_size, relevant, freq, co_freq) -> int:
    if len(tokens) <= window_size:
        windows = [tokens] if tokens else []
    else:
        windows = [
            tokens[i : i + window_size]
            for i in range(len(tokens) - window_size + 1)
        ]
    for window in windows:
        present = sorted(
            {t for t in window if relevant is None or t in relevant}
        )
        _count_group(present, freq, co_freq)
    return len(windows)


def umass_coherence(top_words: list[str], stats: CooccurrenceStats) -> float:
    """Sum over ranked pairs of log((D(w_i, w_j) + 1) / D(w_j)).

    Words are ordered by corpus document frequency, most frequent
    first (ties alphabetical); w_j is the rarer word of each pair.
    Words never seen in the corpus are unscorable, and at least two
    scorable words are required.
    """
    if len(top_words) < 2:
        raise MetricsError("coherence needs at least 2 words")
    seen = []
    for w in top_words:
        if w not in seen:
            seen.append(w)
    scorable = [w for w in seen if stats.doc_freq.get(w, 0) > 0]
    if len(scorable) < 2:
        raise MetricsError("fewer than 2 scorable words for UMass coherence")
    ranked = sorted(scorable, key=lambda w: (-stats.doc_freq[w], w))
    score = 0.0
    for i, wi in enumerate(ranked):
        for wj in ranked[i + 1 :]:
            dj = stats.doc_freq[wj]
            if dj == 0:
                continue
            score += math.log((stats.doc_pair(wi, wj) + 1) / dj)
    return score


def _npmi(stats: CooccurrenceStats, a: str, b: str) -> float:
    if a == b:
        return 1.0
    nw = stats.num_windows
    pa = stats.window_freq.get(a, 0) / nw
    pb = stats.window_freq.get(b, 0) / nw
    pab = stats.window_pair(a, b) / nw
    if pab == 0.0:
        return -1.0
    if pab >= 1.0:
        return 1.0
    value = math.log(pab / (pa * pb)) / (-math.log(pab))
    return max(-1.0, min(1.0, value))


def cv_coherence(top_words: list[str], stats: CooccurrenceStats) -> float:
    """C_V-style coherence of a word set, bounded in [-1, 1].

    Each word gets an NPMI context vector over the set (self-NPMI
    fixed at 1, never-co-occurring pairs at -1).  With the one-set
    segmentation, every word's vector is compared against the summed
    vector of the whole set; the score is the mean of those cosines.
    """
    if len(top_words) < 2:
        raise MetricsError("coherence needs at least 2 words")
    if stats.num_windows == 0:
        warnings.warn("no windows in co-occurrence stats; coherence set to 0")
        return 0.0
    seen = []
    for w in top_words:
        if w not in seen:
            seen.append(w)
    scorable = [w for w in seen if stats.window_freq.get(w, 0) > 0]
    if len(scorable) < 2:
        warnings.warn(
            "fewer than 2 words with corpus support; coherence set to 0"
        )
        return 0.0
    vectors = np.array(
        [[_npmi(stats, a, b) for b in scorable] for a in scorable]
    )
    total = vectors.sum(axis=0)
    total_norm = np.linalg.norm(total)
    if total_norm == 0.0:
        warnings.warn("degenerate all-zero context vectors; coherence set to 0")
        return 0.0
    cosines = []
    for row in vectors:
        norm = np.linalg.norm(row)
        if norm == 0.0:
            cosines.append(0.0)
        else:
            cosines.append(float(row @ total / (norm * total_norm)))
    return float(np.mean(cosines))
