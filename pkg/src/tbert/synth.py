"""Deterministic synthetic fixtures with planted structure.

The main fixture plants topical registers in both text and embedding
space so that every pipeline stage has a known ground truth:

* per-topic word registers give LDA and the clusterer something to
  recover;
* two shared cross-topic word pools ("slang") are textually tight but
  semantically spread across all topics, which text-only LDA tends to
  promote to topics of their own at the expense of merging genuine
  registers, while embedding-driven clusters keep the registers apart;
* chimera documents mix two adjacent registers and sit between their
  parent blobs in embedding space, so cluster quality degrades once k
  grows past the planted topic count.

Everything is driven by one seeded generator, so the same seed always
produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import STOPWORDS, RawDocument
from .embeddings import EmbeddingMatrix, write_tbem
from .porter import stem_fixpoint

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS_INNER = "aeiou"
_VOWELS_FINAL = "aiou"  # avoid final e, which the stemmer may strip

_TOPIC_CLASS = ("positive", "negative", "neutral")


def _word_bank(rng: np.random.Generator, count: int) -> list[str]:
    """Unique nonsense words that survive preprocessing unchanged."""
    words: list[str] = []
    seen = set()
    while len(words) < count:
        syllables = []
        n_syll = int(rng.integers(2, 4))
        for i in range(n_syll):
            c = _CONSONANTS[int(rng.integers(len(_CONSONANTS)))]
            pool = _VOWELS_FINAL if i == n_syll - 1 else _VOWELS_INNER
            v = pool[int(rng.integers(len(pool)))]
            syllables.append(c + v)
        word = "".join(syllables)
        if word in seen or word in STOPWORDS:
            continue
        if stem_fixpoint(word) != word:
            continue
        seen.add(word)
        words.append(word)
    return words


def _zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / (np.arange(1, n + 1) + 2.0)
    return w / w.sum()


@dataclass
class FixtureParams:
    """Sizing knobs for the planted corpus; defaults are calibrated."""

    num_topics: int = 8
    embed_dim: int = 32
    majors_per_topic: int = 76
    slang_per_topic_pool: int = 6
    num_slang_pools: int = 2
    chimera_per_pair: int = 12
    register_words: int = 16
    slang_words: int = 8
    background_words: int = 16
    major_len: tuple[int, int] = (7, 12)
    slang_len: tuple[int, int] = (10, 14)
    chimera_len: tuple[int, int] = (7, 12)
    major_mix: tuple[float, float] = (0.90, 0.10)  # register, background
    slang_mix: tuple[float, float, float] = (0.85, 0.10, 0.05)  # pool, register, background
    chimera_background: float = 0.08
    center_norm: float = 10.0
    sigma: float = 1.5
    chimera_sigma_scale: float = 0.8
    label_noise: float = 0.05


@dataclass
class Fixture:
    """Planted corpus, embeddings, labels, and the ground truth."""

    docs: list[RawDocument]
    embeddings: EmbeddingMatrix
    labels: dict[str, str]
    doc_topics: list[int]
    doc_kinds: list[str]
    register_vocab: list[list[str]]
    slang_vocab: list[list[str]]
    background_vocab: list[str]
    params: FixtureParams = field(default_factory=FixtureParams)


def _draw(rng, vocab_weights: list[tuple[list[str], np.ndarray, float]], length: int) -> list[str]:
    """Compose a document by sampling (vocab, zipf, share) groups."""
    shares = np.array([share for _, _, share in vocab_weights])
    shares = shares / shares.sum()
    tokens = []
    groups = rng.choice(len(vocab_weights), size=length, p=shares)
    for g in groups:
        words, weights, _ = vocab_weights[g]
        tokens.append(words[int(rng.choice(len(words), p=weights))])
    return tokens


def make_fixture(seed: int = 0, params: FixtureParams | None = None) -> Fixture:
    p = params or FixtureParams()
    rng = np.random.default_rng(seed)
    t = p.num_topics

    total_words = (
        t * p.register_words + p.num_slang_pools * p.slang_words + p.background_words
    )
    bank = _word_bank(rng, total_words)
    register_vocab = [
        bank[i * p.register_words : (i + 1) * p.register_words] for i in range(t)
    ]
    offset = t * p.register_words
    slang_vocab = [
        bank[offset + i * p.slang_words : offset + (i + 1) * p.slang_words]
        for i in range(p.num_slang_pools)
    ]
    background_vocab = bank[offset + p.num_slang_pools * p.slang_words :]

    reg_w = _zipf_weights(p.register_words)
    slang_w = _zipf_weights(p.slang_words)
    bg_w = _zipf_weights(p.background_words)

    # blob centers: random directions scaled to a common norm
    centers = rng.normal(size=(t, p.embed_dim))
    centers = centers / np.linalg.norm(centers, axis=1, keepdims=True) * p.center_norm

    docs: list[RawDocument] = []
    vectors: list[np.ndarray] = []
    doc_topics: list[int] = []
    doc_kinds: list[str] = []

    def add_doc(tokens: list[str], topic: int, kind: str, center: np.ndarray, sigma: float):
        idx = len(docs)
        docs.append(RawDocument(id=f"d{idx:04d}", text=" ".join(tokens)))
        vectors.append(center + rng.normal(0.0, sigma, p.embed_dim))
        doc_topics.append(topic)
        doc_kinds.append(kind)

    for topic in range(t):
        for _ in range(p.majors_per_topic):
            length = int(rng.integers(p.major_len[0], p.major_len[1] + 1))
            tokens = _draw(
                rng,
                [
                    (register_vocab[topic], reg_w, p.major_mix[0]),
                    (background_vocab, bg_w, p.major_mix[1]),
                ],
                length,
            )
            add_doc(tokens, topic, "major", centers[topic], p.sigma)

    for topic in range(t):
        for pool in range(p.num_slang_pools):
            for _ in range(p.slang_per_topic_pool):
                length = int(rng.integers(p.slang_len[0], p.slang_len[1] + 1))
                tokens = _draw(
                    rng,
                    [
                        (slang_vocab[pool], slang_w, p.slang_mix[0]),
                        (register_vocab[topic], reg_w, p.slang_mix[1]),
                        (background_vocab, bg_w, p.slang_mix[2]),
                    ],
                    length,
                )
                add_doc(tokens, topic, f"slang{pool}", centers[topic], p.sigma)

    for topic in range(t):
        other = (topic + 1) % t
        midpoint = (centers[topic] + centers[other]) / 2.0
        for _ in range(p.chimera_per_pair):
            length = int(rng.integers(p.chimera_len[0], p.chimera_len[1] + 1))
            half = (1.0 - p.chimera_background) / 2.0
            tokens = _draw(
                rng,
                [
                    (register_vocab[topic], reg_w, half),
                    (register_vocab[other], reg_w, half),
                    (background_vocab, bg_w, p.chimera_background),
                ],
                length,
            )
            add_doc(
                tokens, topic, "chimera", midpoint, p.sigma * p.chimera_sigma_scale
            )

    class_of_topic = [
        _TOPIC_CLASS[0] if topic < 3 else (_TOPIC_CLASS[1] if topic < 5 else _TOPIC_CLASS[2])
        for topic in range(t)
    ]
    labels = {}
    for doc, topic in zip(docs, doc_topics):
        label = class_of_topic[topic]
        if rng.random() < p.label_noise:
            label = _TOPIC_CLASS[int(rng.integers(len(_TOPIC_CLASS)))]
        labels[doc.id] = label

    matrix = EmbeddingMatrix(
        ids=[d.id for d in docs],
        data=np.array(vectors, dtype=np.float32),
    )
    return Fixture(
        docs=docs,
        embeddings=matrix,
        labels=labels,
        doc_topics=doc_topics,
        doc_kinds=doc_kinds,
        register_vocab=register_vocab,
        slang_vocab=slang_vocab,
        background_vocab=background_vocab,
        params=p,
    )


def fixture_config(seed: int = 0) -> dict:
    """Pipeline configuration matched to the fixture's geometry.

    Fusion runs in raw (unnormalized) mode: the blob embeddings carry a
    norm of about 10, and gamma 8 keeps the topic block influential
    without letting it override the embedding geometry. Larger gamma
    values drag same-topic documents out of their home blobs, which
    blurs the planted cluster structure this fixture exists to test.
    """
    return {
        "seed": seed,
        "paths": {
            "corpus": "corpus.csv",
            "embeddings": "embeddings.tbem",
            "labels": "labels.csv",
            "out": "out",
        },
        "corpus": {"min_df": 2, "max_df_fraction": 0.5},
        "lda": {"k": 8, "alpha": 0.1, "beta": 0.01, "iterations": 400, "burn_in": 100},
        "fusion": {"gamma": 8.0, "normalize": False},
        "autoencoder": {
            "latent_dim": 16,
            "epochs": 40,
            "batch_size": 128,
            "learning_rate": 0.001,
            "l1": 0.0001,
            "l2": 0.0,
            "dropout": 0.01,
        },
        "kmeans": {"max_iters": 200, "n_init": 5, "tol": 1e-6},
        "sentiment": {
            "epochs": 30,
            "batch_size": 32,
            "learning_rate": 0.01,
            "weight_decay": 0.0,
            "epsilon": 1e-8,
        },
        "top_n": 10,
        "k_sweep": [5, 6, 7, 8, 10, 12, 15, 17],
    }


def write_fixture(fixture: Fixture, out_dir, seed: int = 0) -> dict[str, str]:
    """Write corpus.csv, embeddings.tbem, labels.csv, and config.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.csv"
    with open(corpus_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "text"])
        for doc in fixture.docs:
            writer.writerow([doc.id, doc.text])
    emb_path = out / "embeddings.tbem"
    write_tbem(fixture.embeddings, emb_path)
    labels_path = out / "labels.csv"
    with open(labels_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for doc in fixture.docs:
            writer.writerow([doc.id, fixture.labels[doc.id]])
    config_path = out / "config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(fixture_config(seed), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return {
        "corpus": str(corpus_path),
        "embeddings": str(emb_path),
        "labels": str(labels_path),
        "config": str(config_path),
    }


def generate_fixture(out_dir, seed: int = 0, params: FixtureParams | None = None) -> dict[str, str]:
    return write_fixture(make_fixture(seed=seed, params=params), out_dir, seed=seed)


def two_topic_corpus(
    seed: int = 0, docs_per_topic: int = 100, vocab_size: int = 10, doc_len: int = 15
) -> tuple[list[RawDocument], list[int]]:
    """Two disjoint-vocabulary document groups for topic recovery tests."""
    rng = np.random.default_rng(seed)
    bank = _word_bank(rng, 2 * vocab_size)
    vocab_a, vocab_b = bank[:vocab_size], bank[vocab_size:]
    weights = _zipf_weights(vocab_size)
    docs, topics = [], []
    for topic, vocab in enumerate((vocab_a, vocab_b)):
        for _ in range(docs_per_topic):
            idx = len(docs)
            tokens = [
                vocab[int(rng.choice(vocab_size, p=weights))] for _ in range(doc_len)
            ]
            docs.append(RawDocument(id=f"d{idx:04d}", text=" ".join(tokens)))
            topics.append(topic)
    return docs, topics


def blob_labeled_set(
    seed: int = 0, per_class: int = 60, dim: int = 8, sigma: float = 0.05
):
    """Three well-separated Gaussian blobs labeled by sentiment class."""
    from .sentiment import CLASSES, LabeledSet

    rng = np.random.default_rng(seed)
    means = np.zeros((3, dim))
    for i in range(3):
        means[i, i] = 1.0
    rows, labels, ids = [], [], []
    for i, cls in enumerate(CLASSES):
        for j in range(per_class):
            rows.append(means[i] + rng.normal(0.0, sigma, dim))
            labels.append(cls)
            ids.append(f"{cls}{j:03d}")
    matrix = EmbeddingMatrix(ids=ids, data=np.array(rows, dtype=np.float32))
    return LabeledSet(embeddings=matrix, labels=labels)
