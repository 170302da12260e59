"""K-Means over latent vectors, plus per-cluster keyword extraction.

Standard Lloyd iterations with k-means++ seeding and restarts.  All
randomness flows through per-restart generators derived from the
config seed, so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus


class ClusteringError(ValueError):
    """Raised for invalid clustering inputs or configuration."""


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iters: int = 300
    n_init: int = 10
    seed: int = 0
    tol: float = 1e-6

    def __post_init__(self):
        if self.k < 1:
            raise ClusteringError("k must be at least 1")
        if self.n_init < 1:
            raise ClusteringError("n_init must be at least 1")
        if self.max_iters < 1:
            raise ClusteringError("max_iters must be at least 1")
        if self.tol < 0:
            raise ClusteringError("tol must be nonnegative")


@dataclass
class ClusterModel:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        + np.sum(centroids * centroids, axis=1)[None, :]
        - 2.0 * (x @ centroids.T)
    )
    np.clip(d2, 0.0, None, out=d2)
    return d2


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = x[first]
    closest = _sq_dists(x, centroids[:1])[:, 0]
    for i in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[i] = x[idx]
        np.minimum(closest, _sq_dists(x, centroids[i : i + 1])[:, 0], out=closest)
    return centroids


def _lloyd(x: np.ndarray, centroids: np.ndarray, config: KMeansConfig):
    k = centroids.shape[0]
    assignments = np.zeros(x.shape[0], dtype=np.int64)
    for _ in range(config.max_iters):
        d2 = _sq_dists(x, centroids)
        assignments = d2.argmin(axis=1)

        # revive empty clusters at the point farthest from its centroid
        counts = np.bincount(assignments, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            own = d2[np.arange(x.shape[0]), assignments].copy()
            for empty in empties:
                donor = int(own.argmax())
                centroids[empty] = x[donor]
                assignments[donor] = empty
                own[donor] = -1.0
            d2 = _sq_dists(x, centroids)
            assignments = d2.argmin(axis=1)
            counts = np.bincount(assignments, minlength=k)

        new_centroids = centroids.copy()
        for c in range(k):
            if counts[c]:
                new_centroids[c] = x[assignments == c].mean(axis=0)
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < config.tol:
            break
    d2 = _sq_dists(x, centroids)
    assignments = d2.argmin(axis=1)
    inertia = float(d2[np.arange(x.shape[0]), assignments].sum())
    return centroids, assignments, inertia


def kmeans(data, config: KMeansConfig) -> ClusterModel:
    """Best of n_init restarts; ties in point assignment go to the
    lowest centroid index (argmin behavior)."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ClusteringError("data must be a 2-D matrix")
    if x.shape[0] < config.k:
        raise ClusteringError(
            f"need at least k={config.k} points, got {x.shape[0]}"
        )
    if not np.isfinite(x).all():
        raise ClusteringError("data contains NaN or Inf")

    best = None
    for restart in range(config.n_init):
        rng = np.random.default_rng(config.seed + restart)
        centroids = _kmeanspp_init(x, config.k, rng)
        centroids, assignments, inertia = _lloyd(x, centroids, config)
        if best is None or inertia < best[2]:
            best = (centroids, assignments, inertia)
    return ClusterModel(centroids=best[0], assignments=best[1], inertia=best[2])


def cluster_top_terms(
    model: ClusterModel, corpus: Corpus, n: int = 10
) -> list[list[tuple[str, int]]]:
    """Per cluster, the n most frequent vocabulary terms with counts.

    Ranked by total in-cluster count, ties by term index.  Empty
    clusters produce empty lists.
    """
    if len(model.assignments) != len(corpus.docs):
        raise ClusteringError(
            f"{len(model.assignments)} assignments for {len(corpus.docs)} documents"
        )
    v = len(corpus.vocabulary)
    counts = np.zeros((model.k, v), dtype=np.int64)
    for cluster, bow in zip(model.assignments, corpus.bows()):
        for term_idx, count in bow:
            counts[cluster, term_idx] += count
    result = []
    for c in range(model.k):
        row = counts[c]
        nonzero = int((row > 0).sum())
        order = np.lexsort((np.arange(v), -row))[: min(n, nonzero)]
        result.append([(corpus.vocabulary.terms[i], int(row[i])) for i in order])
    return result
