"""Reference multi-head self-attention encoder, forward pass only.

A desk-scale, numpy-only implementation used to verify the attention
equations: scaled dot-product attention, per-head projections with
concatenation and output projection, and a single residual block with
a ReLU feed-forward layer.  Not part of the production pipeline path
and never trained; layer normalization is deliberately absent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class AttentionError(ValueError):
    """Raised on conformance failures of shapes or parameters."""


@dataclass
class AttentionParams:
    """Projection and feed-forward weights for one encoder block.

    Per-head projections are stacked on a leading head axis; the
    output projection maps the concatenated heads back to d_model.
    """

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_out: np.ndarray
    w_ff1: np.ndarray
    b_ff1: np.ndarray
    w_ff2: np.ndarray
    b_ff2: np.ndarray

    def __post_init__(self):
        for name in ("w_q", "w_k", "w_v", "w_out", "w_ff1", "b_ff1", "w_ff2", "b_ff2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.w_q.ndim != 3 or not (
            self.w_q.shape == self.w_k.shape == self.w_v.shape
        ):
            raise AttentionError("per-head projections must share shape (heads, d_model, d_head)")
        n_heads, d_model, d_head = self.w_q.shape
        if n_heads * d_head != d_model:
            raise AttentionError(
                f"d_model ({d_model}) must equal n_heads*d_head ({n_heads}x{d_head})"
            )
        if self.w_out.shape != (n_heads * d_head, d_model):
            raise AttentionError("output projection shape mismatch")
        d_ff = self.w_ff1.shape[1]
        if self.w_ff1.shape != (d_model, d_ff) or self.b_ff1.shape != (d_ff,):
            raise AttentionError("feed-forward first layer shape mismatch")
        if self.w_ff2.shape != (d_ff, d_model) or self.b_ff2.shape != (d_model,):
            raise AttentionError("feed-forward second layer shape mismatch")
        for name in ("w_q", "w_k", "w_v", "w_out", "w_ff1", "b_ff1", "w_ff2", "b_ff2"):
            if not np.isfinite(getattr(self, name)).all():
                raise AttentionError(f"non-finite values in {name}")

    @property
    def n_heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def d_model(self) -> int:
        return self.w_q.shape[1]

    @property
    def d_head(self) -> int:
        return self.w_q.shape[2]

    @classmethod
    def random(cls, rng: np.random.Generator, d_model: int, n_heads: int, d_ff: int) -> "AttentionParams":
        if d_model % n_heads != 0:
            raise AttentionError("d_model must be divisible by n_heads")
        d_head = d_model // n_heads
        scale = 1.0 / np.sqrt(d_model)
        return cls(
            w_q=rng.normal(0, scale, (n_heads, d_model, d_head)),
            w_k=rng.normal(0, scale, (n_heads, d_model, d_head)),
            w_v=rng.normal(0, scale, (n_heads, d_model, d_head)),
            w_out=rng.normal(0, scale, (n_heads * d_head, d_model)),
            w_ff1=rng.normal(0, scale, (d_model, d_ff)),
            b_ff1=np.zeros(d_ff),
            w_ff2=rng.normal(0, scale, (d_ff, d_model)),
            b_ff2=np.zeros(d_model),
        )

    def to_json(self, path) -> None:
        payload = {
            name: getattr(self, name).tolist()
            for name in ("w_q", "w_k", "w_v", "w_out", "w_ff1", "b_ff1", "w_ff2", "b_ff2")
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "AttentionParams":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(**{k: np.array(v) for k, v in payload.items()})


@dataclass
class TokenSequence:
    embeddings: np.ndarray
    use_positions: bool = False

    def __post_init__(self):
        self.embeddings = np.asarray(self.embeddings, dtype=np.float64)
        if self.embeddings.ndim != 2 or self.embeddings.shape[0] < 1:
            raise AttentionError("token sequence must be a T x d_model matrix, T >= 1")
        if not np.isfinite(self.embeddings).all():
            raise AttentionError("non-finite token embeddings")


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along one axis."""
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def attention_weights(q: np.ndarray, k: np.ndarray) -> np.ndarray:
    """softmax(QK^T / sqrt(d_k)); each row sums to 1."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or q.shape[1] != k.shape[1]:
        raise AttentionError("Q and K must be 2-D with matching inner dimension")
    d_k = q.shape[1]
    return softmax(q @ k.T / np.sqrt(d_k), axis=-1)


def scaled_dot_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Attention output softmax(QK^T / sqrt(d_k)) V."""
    v = np.asarray(v, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if v.ndim != 2 or k.shape[0] != v.shape[0]:
        raise AttentionError("K and V must agree on sequence length")
    return attention_weights(q, k) @ v


def multi_head(x: np.ndarray, params: AttentionParams) -> np.ndarray:
    """Independent heads, concatenated and projected by the output map."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.d_model:
        raise AttentionError(
            f"input must be T x d_model (= {params.d_model}), got {x.shape}"
        )
    heads = []
    for h in range(params.n_heads):
        q = x @ params.w_q[h]
        k = x @ params.w_k[h]
        v = x @ params.w_v[h]
        heads.append(scaled_dot_attention(q, k, v))
    return np.concatenate(heads, axis=1) @ params.w_out


def sinusoidal_positions(length: int, d_model: int) -> np.ndarray:
    """Fixed sin/cos position encodings, one row per position."""
    if length < 1 or d_model < 1:
        raise AttentionError("length and d_model must be positive")
    positions = np.arange(length, dtype=np.float64)[:, None]
    dims = np.arange(d_model, dtype=np.float64)[None, :]
    angles = positions / np.power(10000.0, 2.0 * np.floor(dims / 2.0) / d_model)
    table = np.empty((length, d_model))
    table[:, 0::2] = np.sin(angles[:, 0::2])
    table[:, 1::2] = np.cos(angles[:, 1::2])
    return table


def feed_forward(x: np.ndarray, params: AttentionParams) -> np.ndarray:
    inner = np.maximum(x @ params.w_ff1 + params.b_ff1, 0.0)
    return inner @ params.w_ff2 + params.b_ff2


def encode(seq: TokenSequence, params: AttentionParams) -> np.ndarray:
    """One residual encoder block over a token sequence.

    X' = X + MultiHead(X), then H = X' + FFN(X'), with sinusoidal
    positions added to X first when enabled.
    """
    x = seq.embeddings
    if x.shape[1] != params.d_model:
        raise AttentionError(
            f"sequence dim {x.shape[1]} does not match d_model {params.d_model}"
        )
    if seq.use_positions:
        x = x + sinusoidal_positions(x.shape[0], params.d_model)
    attended = x + multi_head(x, params)
    return attended + feed_forward(attended, params)
