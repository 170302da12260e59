"""Sentence encoders behind the /embed endpoint.

The default encoder needs no model download and no network: tokens are
hashed into a fixed slot space, each slot owns a seeded Gaussian
projection row, and a sentence is the L2-normalized mean of its token
rows. That keeps inference fully deterministic across processes and
machines while preserving the property the pipeline actually relies
on, that texts sharing vocabulary land near each other.

A pre-trained transformer encoder can be swapped in with a model id
of the form "st:<checkpoint>" when the sentence-transformers package
and its checkpoint files are available.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

DEFAULT_MODEL = "hashed-384"

_TOKEN_RE = re.compile(r"[a-z0-9']+")
_HASHED_RE = re.compile(r"^hashed-(\d+)$")


class EncoderError(RuntimeError):
    """Raised when a model id cannot be resolved or loaded."""


class HashedProjectionEncoder:
    """Deterministic bag-of-tokens encoder over random projections."""

    def __init__(self, dim: int = 384, slots: int = 4096, seed: int = 0):
        if dim < 1 or slots < 1:
            raise EncoderError("dim and slots must be at least 1")
        self.dim = int(dim)
        self.slots = int(slots)
        self.name = f"hashed-{self.dim}"
        rng = np.random.default_rng(seed)
        self._rows = rng.standard_normal((self.slots, self.dim)) / np.sqrt(self.dim)

    def _slot(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.slots

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            tokens = _TOKEN_RE.findall(text.lower())
            if not tokens:
                continue
            for token in tokens:
                out[i] += self._rows[self._slot(token)]
            out[i] /= len(tokens)
            norm = np.linalg.norm(out[i])
            if norm > 0:
                out[i] /= norm
        return out.astype(np.float32)


class SentenceTransformerEncoder:
    """Thin wrapper around a sentence-transformers checkpoint."""

    def __init__(self, checkpoint: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderError(
                "sentence-transformers is not installed; "
                "install the [st] extra to use st: models"
            ) from exc
        try:
            self._model = SentenceTransformer(checkpoint, device="cpu")
        except Exception as exc:
            raise EncoderError(f"cannot load checkpoint {checkpoint!r}: {exc}") from exc
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.name = f"st:{checkpoint}"

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        vectors = self._model.encode(
            texts, convert_to_numpy=True, show_progress_bar=False
        )
        return np.asarray(vectors, dtype=np.float32)


def load_encoder(model_id: str = DEFAULT_MODEL):
    """Resolve a model id to a ready encoder instance."""
    match = _HASHED_RE.match(model_id)
    if match:
        return HashedProjectionEncoder(dim=int(match.group(1)))
    if model_id.startswith("st:"):
        return SentenceTransformerEncoder(model_id[3:])
    raise EncoderError(
        f"unknown model id {model_id!r}; expected hashed-<dim> or st:<checkpoint>"
    )
