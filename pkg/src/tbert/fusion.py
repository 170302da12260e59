"""Fuse LDA topic mixtures with sentence embeddings.

The combined vector for a document is the concatenation of its
gamma-scaled topic mixture and its sentence embedding.  The two blocks
live in different spaces (k topics vs d embedding dimensions), so a
literal sum of them would be ill-defined; the weighted concatenation
[gamma*omega ; H] keeps both intact, and gamma trades off how much the
topic block contributes to downstream Euclidean geometry.

Embeddings are L2-normalized before fusion by default so that a given
gamma means the same thing across embedding providers; raw mode keeps
provider scales (normalize=False).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMatrix, l2_normalize, load_embeddings, write_tbem


class FusionError(ValueError):
    """Raised for misaligned or invalid fusion inputs."""


@dataclass(frozen=True)
class FusionConfig:
    gamma: float = 15.0
    normalize: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise FusionError("gamma must be finite and nonnegative")


@dataclass
class FusedMatrix:
    """M x (k+d) fused vectors with the topic block in the first k columns."""

    data: np.ndarray
    k: int
    d: int
    gamma: float
    ids: list[str] | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[1] != self.k + self.d:
            raise FusionError(
                f"fused data must have k+d = {self.k + self.d} columns"
            )
        if not np.isfinite(self.data).all():
            raise FusionError("fused matrix contains NaN or Inf")
        if self.ids is not None and len(self.ids) != self.data.shape[0]:
            raise FusionError("ids do not align with fused rows")
        if self.data.shape[0] and self.k:
            sums = self.data[:, : self.k].sum(axis=1)
            if np.abs(sums - self.gamma).max() > 1e-6:
                raise FusionError(
                    "topic block rows must sum to gamma (scaled simplex)"
                )

    @property
    def topic_block(self) -> np.ndarray:
        return self.data[:, : self.k]

    @property
    def embedding_block(self) -> np.ndarray:
        return self.data[:, self.k :]


def fuse(omega, h, config: FusionConfig, ids: list[str] | None = None) -> FusedMatrix:
    """Concatenate gamma-scaled topic mixtures with embeddings, row-wise.

    Accepts h as an EmbeddingMatrix (ids carried over) or a plain
    matrix.  Rows must align 1:1 in document order.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if isinstance(h, EmbeddingMatrix):
        if config.normalize:
            h = l2_normalize(h)
        if ids is None:
            ids = list(h.ids)
        h_data = h.data.astype(np.float64)
    else:
        h_data = np.asarray(h, dtype=np.float64)
        if config.normalize:
            norms = np.linalg.norm(h_data, axis=1)
            norms[norms == 0.0] = 1.0
            h_data = h_data / norms[:, None]
    if omega.ndim != 2 or h_data.ndim != 2:
        raise FusionError("omega and H must be 2-D matrices")
    if omega.shape[0] != h_data.shape[0]:
        raise FusionError(
            f"row counts differ: omega has {omega.shape[0]}, H has {h_data.shape[0]}"
        )
    if not np.isfinite(omega).all() or not np.isfinite(h_data).all():
        raise FusionError("NaN or Inf in fusion inputs")
    data = np.hstack([config.gamma * omega, h_data])
    return FusedMatrix(
        data=data,
        k=omega.shape[1],
        d=h_data.shape[1],
        gamma=config.gamma,
        ids=ids,
    )


def save_fused(fm: FusedMatrix, path) -> None:
    """Persist as a TBEM file (float32) plus a JSON sidecar with k/d/gamma."""
    ids = fm.ids if fm.ids is not None else [str(i) for i in range(fm.data.shape[0])]
    write_tbem(EmbeddingMatrix(ids=ids, data=fm.data.astype(np.float32)), path)
    with open(f"{path}.json", "w", encoding="utf-8") as fh:
        json.dump(
            {"k": fm.k, "d": fm.d, "gamma": fm.gamma},
            fh,
            sort_keys=True,
            separators=(",", ":"),
        )
        fh.write("\n")


def load_fused(path) -> FusedMatrix:
    matrix = load_embeddings(path)
    try:
        with open(f"{path}.json", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        k, d, gamma = int(sidecar["k"]), int(sidecar["d"]), float(sidecar["gamma"])
    except (OSError, KeyError, ValueError) as exc:
        raise FusionError(f"unreadable fusion sidecar for {path}: {exc}") from exc
    data = matrix.data.astype(np.float64)
    if k and gamma > 0 and data.shape[0]:
        # float32 storage rounds the topic block; rescale each row so it
        # sums to gamma again exactly
        sums = data[:, :k].sum(axis=1)
        if (sums <= 0).any():
            raise FusionError(f"{path}: nonpositive topic block row sums")
        data[:, :k] *= (gamma / sums)[:, None]
    return FusedMatrix(data=data, k=k, d=d, gamma=gamma, ids=list(matrix.ids))
