"""Sentence-embedding acquisition, validation, and normalization.

Embeddings are always produced elsewhere (a file or an HTTP service)
and consumed here as an EmbeddingMatrix: float32 storage, one row per
document id.  Downstream arithmetic promotes to float64.
"""

from __future__ import annotations

import json
import os
import struct
import warnings
from dataclasses import dataclass

import numpy as np
import requests

TBEM_MAGIC = b"TBEM"
TBEM_VERSION = 1

ENDPOINT_ENV_VAR = "TBERT_EMBED_ENDPOINT"


class EmbeddingError(ValueError):
    """Raised for malformed embedding files or matrices."""


class EmbeddingFetchError(RuntimeError):
    """Raised when the HTTP embedding provider cannot satisfy a request."""


@dataclass
class EmbeddingMatrix:
    """Document ids aligned with rows of a float32 matrix."""

    ids: list[str]
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise EmbeddingError("embedding data must be a 2-D matrix")
        if len(self.ids) != data.shape[0]:
            raise EmbeddingError(
                f"{len(self.ids)} ids for {data.shape[0]} embedding rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise EmbeddingError("duplicate document id in embeddings")
        if data.size and not np.isfinite(data).all():
            raise EmbeddingError("embeddings contain NaN or Inf")
        self.data = data

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])

    def __len__(self) -> int:
        return int(self.data.shape[0])

    def row_for(self, doc_id: str) -> np.ndarray:
        try:
            return self.data[self.ids.index(doc_id)]
        except ValueError:
            raise EmbeddingError(f"no embedding for id {doc_id!r}") from None

    def subset(self, ids: list[str]) -> "EmbeddingMatrix":
        """Rows for the given ids in the given order; extras are dropped."""
        index = {doc_id: i for i, doc_id in enumerate(self.ids)}
        missing = [i for i in ids if i not in index]
        if missing:
            raise EmbeddingError(f"embeddings missing ids: {missing[:10]}")
        rows = np.array([index[i] for i in ids], dtype=np.int64)
        return EmbeddingMatrix(ids=list(ids), data=self.data[rows])

    def reordered(self, ids: list[str]) -> "EmbeddingMatrix":
        """Rows rearranged to match the given id order.

        Ids must be exactly the same set; anything missing or extra is
        reported.
        """
        if len(ids) != len(self.ids) or set(ids) != set(self.ids):
            missing = [i for i in ids if i not in set(self.ids)]
            if missing:
                raise EmbeddingError(f"embeddings missing ids: {missing[:10]}")
            extra = sorted(set(self.ids) - set(ids))
            raise EmbeddingError(f"embeddings have extra ids: {extra[:10]}")
        return self.subset(ids)


def write_tbem(matrix: EmbeddingMatrix, path) -> None:
    """Write the binary embedding format: header, rows, id records."""
    n, d = matrix.data.shape
    with open(path, "wb") as fh:
        fh.write(TBEM_MAGIC)
        fh.write(struct.pack("<III", TBEM_VERSION, n, d))
        fh.write(np.ascontiguousarray(matrix.data, dtype="<f4").tobytes())
        for doc_id in matrix.ids:
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise EmbeddingError(f"id too long for format: {doc_id[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)


def _load_tbem(blob: bytes, path) -> EmbeddingMatrix:
    header = struct.calcsize("<4sIII")
    if len(blob) < header:
        raise EmbeddingError(f"{path}: truncated header")
    magic, version, count, dim = struct.unpack_from("<4sIII", blob, 0)
    if magic != TBEM_MAGIC:
        raise EmbeddingError(f"{path}: bad magic {magic!r}")
    if version != TBEM_VERSION:
        raise EmbeddingError(f"{path}: unsupported version {version}")
    offset = header
    need = count * dim * 4
    if len(blob) < offset + need:
        raise EmbeddingError(f"{path}: truncated payload (expected {count}x{dim} rows)")
    data = np.frombuffer(blob, dtype="<f4", count=count * dim, offset=offset)
    data = data.reshape(count, dim).copy()
    offset += need
    ids = []
    for _ in range(count):
        if len(blob) < offset + 2:
            raise EmbeddingError(f"{path}: truncated id records")
        (id_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if len(blob) < offset + id_len:
            raise EmbeddingError(f"{path}: truncated id records")
        ids.append(blob[offset : offset + id_len].decode("utf-8"))
        offset += id_len
    if offset != len(blob):
        raise EmbeddingError(f"{path}: {len(blob) - offset} trailing bytes")
    return EmbeddingMatrix(ids=ids, data=data)


def _load_jsonl(path) -> EmbeddingMatrix:
    ids, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or "vector" not in obj:
                raise EmbeddingError(f"{path}:{lineno}: need id and vector keys")
            ids.append(str(obj["id"]))
            rows.append([float(x) for x in obj["vector"]])
    if not rows:
        raise EmbeddingError(f"{path}: no embedding rows")
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise EmbeddingError(f"{path}: inconsistent vector dimensions {sorted(dims)}")
    return EmbeddingMatrix(ids=ids, data=np.array(rows, dtype=np.float32))


def load_embeddings(path) -> EmbeddingMatrix:
    """Load a TBEM binary file, or JSONL when the magic is absent."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == TBEM_MAGIC:
        with open(path, "rb") as fh:
            return _load_tbem(fh.read(), path)
    return _load_jsonl(path)


def write_jsonl(matrix: EmbeddingMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, row in zip(matrix.ids, matrix.data):
            obj = {"id": doc_id, "vector": [float(x) for x in row]}
            fh.write(json.dumps(obj, sort_keys=True))
            fh.write("\n")


def default_endpoint() -> str | None:
    return os.environ.get(ENDPOINT_ENV_VAR)


def fetch_embeddings(
    endpoint: str,
    texts: list[str],
    batch_size: int = 32,
    ids: list[str] | None = None,
    timeout: float = 60.0,
) -> EmbeddingMatrix:
    """POST texts to {endpoint}/embed in batches, preserving order.

    Every batch must report the same dimension and return exactly one
    vector per text; anything else is a protocol error.
    """
    if batch_size < 1:
        raise EmbeddingFetchError("batch_size must be at least 1")
    if ids is None:
        ids = [str(i) for i in range(len(texts))]
    if len(ids) != len(texts):
        raise EmbeddingFetchError("ids and texts differ in length")
    if not texts:
        return EmbeddingMatrix(ids=[], data=np.zeros((0, 0), dtype=np.float32))

    url = endpoint.rstrip("/") + "/embed"
    dim: int | None = None
    rows: list[list[float]] = []
    for start in range(0, len(texts), batch_size):
        chunk = texts[start : start + batch_size]
        try:
            resp = requests.post(url, json={"texts": chunk}, timeout=timeout)
        except requests.RequestException as exc:
            raise EmbeddingFetchError(f"transport failure against {url}: {exc}") from exc
        if resp.status_code >= 400:
            detail = ""
            try:
                detail = resp.json().get("error", "")
            except ValueError:
                detail = resp.text[:200]
            raise EmbeddingFetchError(
                f"{url} returned status {resp.status_code}: {detail}"
            )
        try:
            payload = resp.json()
        except ValueError as exc:
            raise EmbeddingFetchError(f"{url} returned non-JSON body") from exc
        if "dim" not in payload or "vectors" not in payload:
            raise EmbeddingFetchError(f"{url} response missing dim/vectors")
        batch_dim = int(payload["dim"])
        vectors = payload["vectors"]
        if dim is None:
            dim = batch_dim
        elif batch_dim != dim:
            raise EmbeddingFetchError(
                f"dim changed across batches: {dim} then {batch_dim}"
            )
        if len(vectors) != len(chunk):
            raise EmbeddingFetchError(
                f"sent {len(chunk)} texts, received {len(vectors)} vectors"
            )
        for vec in vectors:
            if len(vec) != dim:
                raise EmbeddingFetchError("vector length does not match declared dim")
            rows.append([float(x) for x in vec])
    return EmbeddingMatrix(ids=ids, data=np.array(rows, dtype=np.float32))


def l2_normalize(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale each row to unit Euclidean norm; zero rows stay zero."""
    data = matrix.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    zero = norms == 0.0
    if zero.any():
        warnings.warn(f"{int(zero.sum())} zero-norm embedding rows left unnormalized")
    norms[zero] = 1.0
    return EmbeddingMatrix(ids=list(matrix.ids), data=data / norms[:, None])


def mean_pool(token_vectors) -> np.ndarray:
    """Column mean of a T x d matrix of token vectors."""
    arr = np.asarray(token_vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise EmbeddingError("mean_pool needs a nonempty T x d matrix")
    return arr.mean(axis=0)
