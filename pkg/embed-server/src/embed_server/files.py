"""Batch precompute: read a corpus file, write the binary matrix.

Input follows the corpus interface (CSV with an id,text header when
the path ends in .csv, otherwise JSON lines with id and text keys).
Output vectors are identical to what /embed would return for the same
texts because both paths share one encoder.
"""

from __future__ import annotations

import csv
import json

from .encoder import DEFAULT_MODEL, load_encoder
from .tbem import write_tbem


class InputError(ValueError):
    """Raised for unreadable or malformed corpus input."""


def read_texts(path) -> tuple[list[str], list[str]]:
    if str(path).endswith(".csv"):
        ids, texts = _read_csv(path)
    else:
        ids, texts = _read_jsonl(path)
    seen = set()
    for doc_id in ids:
        if doc_id in seen:
            raise InputError(f"{path}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
    return ids, texts


def _read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "text"} <= set(reader.fieldnames):
            raise InputError(f"{path}: expected a CSV header with id and text columns")
        ids, texts = [], []
        for lineno, row in enumerate(reader, start=2):
            if row.get("id") is None or row.get("text") is None:
                raise InputError(f"{path}:{lineno}: missing id or text field")
            ids.append(row["id"])
            texts.append(row["text"])
    return ids, texts


def _read_jsonl(path):
    ids, texts = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise InputError(f"{path}:{lineno}: each line needs id and text keys")
            ids.append(str(obj["id"]))
            texts.append(str(obj["text"]))
    return ids, texts


def embed_file(in_path, out_path, model: str = DEFAULT_MODEL,
               encoder=None) -> tuple[int, int]:
    """Encode a corpus file to a TBEM file; returns (rows, dim)."""
    encoder = encoder or load_encoder(model)
    ids, texts = read_texts(in_path)
    vectors = encoder.encode(texts)
    write_tbem(ids, vectors, out_path)
    return len(ids), encoder.dim
