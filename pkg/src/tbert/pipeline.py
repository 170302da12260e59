"""End-to-end orchestration: configuration, stage graph, artifacts.

A run executes preprocess, embeddings, lda, fusion, autoencoder,
kmeans, metrics, sentiment, and the topic/sentiment join, then writes
six artifacts into the output directory:

    topics.json          per-topic top words with probabilities
    assignments.csv      document id to cluster
    wordcloud_freqs.json plot-ready term frequencies per cluster/topic
    metrics.json         coherence, silhouette, classification scores
    sentiment.csv        id, cluster, predicted class, probabilities
    report.json          effective config, stage summaries, metrics

Failures are wrapped with the failing stage's name, and nothing is
left behind: artifacts are written only after every stage succeeds,
and any partially written set is removed.

Stage seeds derive from the master seed (lda +11, autoencoder +12,
kmeans +13, sentiment +14) unless a stage sets its own. The config
echoed into report.json carries the resolved seeds and absolute
paths, so re-running from that echo reproduces the run exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autoencoder import AeConfig, AeModel, encode, train_autoencoder
from .clustering import ClusterModel, KMeansConfig, cluster_top_terms, kmeans
from .corpus import Corpus, build_vocabulary, preprocess_corpus, read_corpus
from .embeddings import EmbeddingMatrix, load_embeddings
from .fusion import FusionConfig, fuse
from .lda import LdaHyperParams, LdaModel, log_likelihood, top_words, train_lda
from .metrics import CooccurrenceStats, cv_coherence, silhouette, umass_coherence
from .sentiment import (
    CLASSES,
    SentimentModel,
    SentimentTrainConfig,
    apply_label_map,
    evaluate,
    labeled_set_for,
    predict,
    read_label_map,
    read_labels_csv,
    train_classifier,
)

ARTIFACT_NAMES = (
    "topics.json",
    "assignments.csv",
    "wordcloud_freqs.json",
    "metrics.json",
    "sentiment.csv",
    "report.json",
)

COHERENCE_WINDOW = 110
WORDCLOUD_TERMS = 50


class ConfigError(ValueError):
    """Raised when a configuration file cannot be interpreted."""


def _json_scalar(obj):
    """Let stray numpy scalars serialize as plain numbers."""
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


class PipelineError(RuntimeError):
    """Raised when a pipeline stage fails; message names the stage."""


def _section(raw: dict, name: str, allowed: set[str]) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    unknown = sorted(set(value) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in config section {name!r}: {unknown}")
    return value


_TOP_KEYS = {"seed", "paths", "corpus", "lda", "fusion", "autoencoder",
             "kmeans", "sentiment", "top_n", "k_sweep"}
_PATH_KEYS = {"corpus", "embeddings", "labels", "label_map",
              "sentiment_model", "out"}
_CORPUS_KEYS = {"min_df", "max_df_fraction"}
_LDA_KEYS = {"k", "alpha", "beta", "iterations", "burn_in",
             "average_after_burn_in", "seed"}
_FUSION_KEYS = {"gamma", "normalize"}
_AE_KEYS = {"latent_dim", "epochs", "batch_size", "learning_rate",
            "l1", "l2", "dropout", "seed"}
_KMEANS_KEYS = {"max_iters", "n_init", "tol", "seed"}
_SENTIMENT_KEYS = {"epochs", "batch_size", "learning_rate",
                   "weight_decay", "epsilon", "seed"}


@dataclass
class PipelineConfig:
    """Fully resolved run configuration.

    Every default is materialized and every path is absolute, so the
    dict form (`to_dict`) is a complete, relocatable description of
    the run.
    """

    seed: int
    corpus_path: str
    embeddings_path: str
    out_dir: str
    labels_path: str | None
    label_map_path: str | None
    sentiment_model_path: str | None
    min_df: int
    max_df_fraction: float
    lda: LdaHyperParams
    fusion: FusionConfig
    autoencoder: AeConfig
    kmeans_max_iters: int
    kmeans_n_init: int
    kmeans_tol: float
    kmeans_seed: int
    sentiment: SentimentTrainConfig
    top_n: int
    k_sweep: list[int] = field(default_factory=list)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "PipelineConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = sorted(set(raw) - _TOP_KEYS)
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {unknown}")
        base = Path(base_dir)
        seed = int(raw.get("seed", 0))

        paths = _section(raw, "paths", _PATH_KEYS)
        for required in ("corpus", "embeddings"):
            if required not in paths:
                raise ConfigError(f"config paths.{required} is required")

        def resolve(key, default=None):
            value = paths.get(key, default)
            if value is None:
                return None
            return str((base / value).resolve())

        corpus_sec = _section(raw, "corpus", _CORPUS_KEYS)
        lda_sec = _section(raw, "lda", _LDA_KEYS)
        fusion_sec = _section(raw, "fusion", _FUSION_KEYS)
        ae_sec = _section(raw, "autoencoder", _AE_KEYS)
        km_sec = _section(raw, "kmeans", _KMEANS_KEYS)
        sent_sec = _section(raw, "sentiment", _SENTIMENT_KEYS)

        lda = LdaHyperParams(
            k=int(lda_sec.get("k", 8)),
            alpha=float(lda_sec.get("alpha", 0.1)),
            beta=float(lda_sec.get("beta", 0.01)),
            iterations=int(lda_sec.get("iterations", 1000)),
            burn_in=int(lda_sec.get("burn_in", 200)),
            seed=int(lda_sec.get("seed", seed + 11)),
            average_after_burn_in=bool(lda_sec.get("average_after_burn_in", False)),
        )
        fusion = FusionConfig(
            gamma=float(fusion_sec.get("gamma", 15.0)),
            normalize=bool(fusion_sec.get("normalize", True)),
        )
        autoencoder = AeConfig(
            latent_dim=int(ae_sec.get("latent_dim", 64)),
            epochs=int(ae_sec.get("epochs", 50)),
            batch_size=int(ae_sec.get("batch_size", 128)),
            learning_rate=float(ae_sec.get("learning_rate", 1e-3)),
            l1=float(ae_sec.get("l1", 1e-4)),
            l2=float(ae_sec.get("l2", 0.0)),
            dropout=float(ae_sec.get("dropout", 0.01)),
            seed=int(ae_sec.get("seed", seed + 12)),
        )
        sentiment = SentimentTrainConfig(
            epochs=int(sent_sec.get("epochs", 10)),
            batch_size=(None if sent_sec.get("batch_size", 32) is None
                        else int(sent_sec.get("batch_size", 32))),
            learning_rate=float(sent_sec.get("learning_rate", 1e-3)),
            weight_decay=float(sent_sec.get("weight_decay", 0.0)),
            epsilon=float(sent_sec.get("epsilon", 1e-8)),
            seed=int(sent_sec.get("seed", seed + 14)),
        )
        k_sweep = [int(k) for k in raw.get("k_sweep", [5, 6, 7, 8, 10, 12, 15, 17])]
        return cls(
            seed=seed,
            corpus_path=resolve("corpus"),
            embeddings_path=resolve("embeddings"),
            out_dir=resolve("out", "out"),
            labels_path=resolve("labels"),
            label_map_path=resolve("label_map"),
            sentiment_model_path=resolve("sentiment_model"),
            min_df=int(corpus_sec.get("min_df", 2)),
            max_df_fraction=float(corpus_sec.get("max_df_fraction", 0.5)),
            lda=lda,
            fusion=fusion,
            autoencoder=autoencoder,
            kmeans_max_iters=int(km_sec.get("max_iters", 300)),
            kmeans_n_init=int(km_sec.get("n_init", 10)),
            kmeans_tol=float(km_sec.get("tol", 1e-6)),
            kmeans_seed=int(km_sec.get("seed", seed + 13)),
            sentiment=sentiment,
            top_n=int(raw.get("top_n", 10)),
            k_sweep=k_sweep,
        )

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        return cls.from_dict(raw, base_dir=path.parent)

    def to_dict(self) -> dict:
        paths = {
            "corpus": self.corpus_path,
            "embeddings": self.embeddings_path,
            "out": self.out_dir,
        }
        if self.labels_path is not None:
            paths["labels"] = self.labels_path
        if self.label_map_path is not None:
            paths["label_map"] = self.label_map_path
        if self.sentiment_model_path is not None:
            paths["sentiment_model"] = self.sentiment_model_path
        return {
            "seed": self.seed,
            "paths": paths,
            "corpus": {
                "min_df": self.min_df,
                "max_df_fraction": self.max_df_fraction,
            },
            "lda": {
                "k": self.lda.k,
                "alpha": self.lda.alpha,
                "beta": self.lda.beta,
                "iterations": self.lda.iterations,
                "burn_in": self.lda.burn_in,
                "average_after_burn_in": self.lda.average_after_burn_in,
                "seed": self.lda.seed,
            },
            "fusion": {
                "gamma": self.fusion.gamma,
                "normalize": self.fusion.normalize,
            },
            "autoencoder": {
                "latent_dim": self.autoencoder.latent_dim,
                "epochs": self.autoencoder.epochs,
                "batch_size": self.autoencoder.batch_size,
                "learning_rate": self.autoencoder.learning_rate,
                "l1": self.autoencoder.l1,
                "l2": self.autoencoder.l2,
                "dropout": self.autoencoder.dropout,
                "seed": self.autoencoder.seed,
            },
            "kmeans": {
                "max_iters": self.kmeans_max_iters,
                "n_init": self.kmeans_n_init,
                "tol": self.kmeans_tol,
                "seed": self.kmeans_seed,
            },
            "sentiment": {
                "epochs": self.sentiment.epochs,
                "batch_size": self.sentiment.batch_size,
                "learning_rate": self.sentiment.learning_rate,
                "weight_decay": self.sentiment.weight_decay,
                "epsilon": self.sentiment.epsilon,
                "seed": self.sentiment.seed,
            },
            "top_n": self.top_n,
            "k_sweep": list(self.k_sweep),
        }

    def kmeans_config(self, k: int) -> KMeansConfig:
        return KMeansConfig(
            k=k,
            max_iters=self.kmeans_max_iters,
            n_init=self.kmeans_n_init,
            tol=self.kmeans_tol,
            seed=self.kmeans_seed,
        )


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"stage {name}: {exc}") from exc


def _load_corpus(config: PipelineConfig) -> tuple[Corpus, dict]:
    raw_docs = read_corpus(config.corpus_path)
    processed = preprocess_corpus(raw_docs)
    kept = [d for d in processed if d.tokens]
    if not kept:
        raise ValueError("no documents with tokens after preprocessing")
    vocab = build_vocabulary(kept, min_df=config.min_df,
                             max_df_fraction=config.max_df_fraction)
    corpus = Corpus(docs=kept, vocabulary=vocab)
    summary = {
        "documents_in": len(raw_docs),
        "documents_kept": len(kept),
        "dropped_empty": len(processed) - len(kept),
        "vocabulary_size": len(vocab.terms),
    }
    return corpus, summary


def _mean_coherence(term_lists, stats) -> tuple[list[float], list[float]]:
    cv, um = [], []
    for terms in term_lists:
        if len(terms) < 2:
            cv.append(0.0)
            um.append(0.0)
            continue
        cv.append(cv_coherence(terms, stats))
        um.append(umass_coherence(terms, stats))
    return cv, um


def _compute_metrics(config, corpus, model, h_matrix, latent, km, stats):
    lda_terms = [top_words(model, t, config.top_n) for t in range(model.params.k)]
    cluster_terms = [
        [w for w, _ in terms] for terms in cluster_top_terms(km, corpus, n=config.top_n)
    ]
    lda_cv, lda_um = _mean_coherence(lda_terms, stats)
    cl_cv, cl_um = _mean_coherence(cluster_terms, stats)

    raw = h_matrix.data.astype(np.float64)
    km_raw = kmeans(raw, config.kmeans_config(km.k))
    metrics = {
        "lda": {
            "mean_cv": float(np.mean(lda_cv)),
            "mean_umass": float(np.mean(lda_um)),
            "per_topic_cv": lda_cv,
            "per_topic_umass": lda_um,
        },
        "clusters": {
            "mean_cv": float(np.mean(cl_cv)),
            "mean_umass": float(np.mean(cl_um)),
            "per_cluster_cv": cl_cv,
            "per_cluster_umass": cl_um,
        },
        "silhouette": {
            "fused_latent": silhouette(latent, km.assignments),
            "raw_embedding": silhouette(raw, km_raw.assignments),
        },
        "kmeans": {"k": km.k, "inertia": km.inertia},
        "classification": None,
    }
    return metrics, lda_terms, cluster_terms


def _sentiment_stage(config: PipelineConfig, h_matrix: EmbeddingMatrix):
    """Train or load the classifier, predict every document."""
    if config.sentiment_model_path is not None:
        model = SentimentModel.load(config.sentiment_model_path)
        mode = "loaded"
    elif config.labels_path is not None:
        labels = read_labels_csv(config.labels_path)
        if config.label_map_path is not None:
            labels = apply_label_map(labels, read_label_map(config.label_map_path))
        known = {i for i in h_matrix.ids}
        labels = {i: v for i, v in labels.items() if i in known}
        labeled = labeled_set_for(h_matrix, labels)
        model = train_classifier(labeled, config.sentiment)
        mode = "trained"
    else:
        raise ValueError(
            "sentiment stage needs paths.labels (train) or "
            "paths.sentiment_model (load)"
        )
    classes, probs = predict(model, h_matrix)
    summary = {"mode": mode, "seed": config.sentiment.seed}
    eval_report = None
    if config.labels_path is not None:
        labels = read_labels_csv(config.labels_path)
        if config.label_map_path is not None:
            labels = apply_label_map(labels, read_label_map(config.label_map_path))
        labels = {i: v for i, v in labels.items() if i in set(h_matrix.ids)}
        if labels:
            labeled = labeled_set_for(h_matrix, labels)
            eval_report = evaluate(model, labeled)
            summary["labeled_docs"] = len(labels)
    return model, classes, probs, summary, eval_report


def join_topics_sentiments(assignments: dict[str, int],
                           sentiments: dict[str, str]) -> dict:
    """Per-cluster sentiment distributions over matched document ids."""
    if not assignments or not sentiments:
        raise ValueError("empty assignment or sentiment set")
    a_ids, s_ids = set(assignments), set(sentiments)
    if a_ids != s_ids:
        missing_s = sorted(a_ids - s_ids)[:10]
        missing_a = sorted(s_ids - a_ids)[:10]
        parts = []
        if missing_s:
            parts.append(f"ids without sentiment: {missing_s}")
        if missing_a:
            parts.append(f"ids without cluster: {missing_a}")
        raise ValueError("id sets differ; " + "; ".join(parts))
    clusters: dict[int, dict[str, int]] = {}
    for doc_id, cluster in assignments.items():
        counts = clusters.setdefault(int(cluster), {c: 0 for c in CLASSES})
        counts[sentiments[doc_id]] += 1
    report = {}
    for cluster in sorted(clusters):
        counts = clusters[cluster]
        total = sum(counts.values())
        report[str(cluster)] = {
            "size": total,
            "counts": dict(counts),
            "fractions": {c: counts[c] / total for c in CLASSES},
        }
    return report


def _write_artifacts(config, corpus, model, lda_terms, cluster_terms, km,
                     classes, probs, metrics, join_report, stages) -> dict[str, str]:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit_json(name: str, payload) -> None:
        path = out / name
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2,
                      default=_json_scalar)
            fh.write("\n")
        written.append(path)

    try:
        topics_payload = {
            "k": model.params.k,
            "topics": [
                {
                    "topic": t,
                    "words": [
                        {"word": w, "prob": float(model.phi[t, corpus.vocabulary.index(w)])}
                        for w in lda_terms[t]
                    ],
                }
                for t in range(model.params.k)
            ],
        }
        emit_json("topics.json", topics_payload)

        path = out / "assignments.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("id,cluster\r\n")
            for doc_id, cluster in zip(corpus.ids, km.assignments):
                fh.write(f"{doc_id},{int(cluster)}\r\n")
        written.append(path)

        all_cluster_terms = cluster_top_terms(km, corpus, n=WORDCLOUD_TERMS)
        wordclouds = {
            "clusters": {
                str(c): {w: int(n) for w, n in terms}
                for c, terms in enumerate(all_cluster_terms)
            },
            "topics": {
                str(t): {
                    w: float(model.phi[t, corpus.vocabulary.index(w)])
                    for w in top_words(model, t, WORDCLOUD_TERMS)
                }
                for t in range(model.params.k)
            },
        }
        emit_json("wordcloud_freqs.json", wordclouds)
        emit_json("metrics.json", metrics)

        path = out / "sentiment.csv"
        cluster_of = dict(zip(corpus.ids, (int(c) for c in km.assignments)))
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("id,cluster,sentiment,p_positive,p_negative,p_neutral\r\n")
            for i, doc_id in enumerate(corpus.ids):
                p = [repr(float(v)) for v in probs[i]]
                fh.write(
                    f"{doc_id},{cluster_of[doc_id]},{classes[i]},"
                    f"{p[0]},{p[1]},{p[2]}\r\n"
                )
        written.append(path)

        report = {
            "config": config.to_dict(),
            "stages": stages,
            "metrics": metrics,
            "clusters": [
                {
                    "cluster": c,
                    "top_terms": cluster_terms[c],
                    **join_report.get(str(c), {
                        "size": 0,
                        "counts": {cls: 0 for cls in CLASSES},
                        "fractions": {cls: 0.0 for cls in CLASSES},
                    }),
                }
                for c in range(km.k)
            ],
        }
        emit_json("report.json", report)
    except Exception as exc:
        for p in written:
            try:
                os.remove(p)
            except OSError:
                pass
        raise PipelineError(f"stage artifacts: {exc}") from exc
    return {p.name: str(p) for p in written}


def run_pipeline(config: PipelineConfig) -> dict[str, str]:
    """Execute every stage and write the artifact set; returns paths."""
    corpus, pre_summary = _stage("preprocess", _load_corpus, config)

    def load_embedding_rows():
        return load_embeddings(config.embeddings_path).subset(corpus.ids)

    h_matrix = _stage("embeddings", load_embedding_rows)
    model = _stage("lda", train_lda, corpus, config.lda)
    fused = _stage("fusion", fuse, model.theta, h_matrix, config.fusion,
                   ids=corpus.ids)
    ae = _stage("autoencoder", train_autoencoder, fused, config.autoencoder)
    latent = _stage("autoencoder", encode, ae, fused.data)
    km = _stage("kmeans", kmeans, latent, config.kmeans_config(config.lda.k))

    def build_stats():
        return CooccurrenceStats.from_documents(
            [d.tokens for d in corpus.docs], window_size=COHERENCE_WINDOW
        )

    stats = _stage("metrics", build_stats)
    metrics, lda_terms, cluster_terms = _stage(
        "metrics", _compute_metrics, config, corpus, model, h_matrix,
        latent, km, stats
    )
    sent_model, classes, probs, sent_summary, eval_report = _stage(
        "sentiment", _sentiment_stage, config, h_matrix
    )
    if eval_report is not None:
        metrics["classification"] = {
            "accuracy": eval_report.accuracy,
            "weighted_f1": eval_report.weighted_f1,
            "per_class_accuracy": eval_report.per_class_accuracy,
            "confusion": {
                "classes": list(eval_report.confusion.classes),
                "matrix": [[int(v) for v in row]
                           for row in eval_report.confusion.matrix],
            },
            "num_labeled": sent_summary.get("labeled_docs", 0),
        }

    assignments_by_id = dict(zip(corpus.ids, (int(c) for c in km.assignments)))
    sentiments_by_id = dict(zip(corpus.ids, classes))
    join_report = _stage("join", join_topics_sentiments,
                         assignments_by_id, sentiments_by_id)

    stages = {
        "preprocess": pre_summary,
        "embeddings": {"rows": len(h_matrix.ids), "dim": h_matrix.dim},
        "lda": {
            "seed": config.lda.seed,
            "k": config.lda.k,
            "iterations": config.lda.iterations,
            "burn_in": config.lda.burn_in,
            "log_likelihood": log_likelihood(model, corpus),
        },
        "fusion": {
            "gamma": config.fusion.gamma,
            "normalize": config.fusion.normalize,
            "dim": fused.k + fused.d,
        },
        "autoencoder": {
            "seed": config.autoencoder.seed,
            "latent_dim": config.autoencoder.latent_dim,
            "epochs": config.autoencoder.epochs,
            "final_train_loss": ae.train_loss[-1],
            "final_val_loss": ae.val_loss[-1],
        },
        "kmeans": {
            "seed": config.kmeans_seed,
            "k": km.k,
            "inertia": km.inertia,
        },
        "sentiment": sent_summary,
    }
    return _write_artifacts(config, corpus, model, lda_terms, cluster_terms,
                            km, classes, probs, metrics, join_report, stages)


@dataclass
class SweepReport:
    """Per-k pipeline quality plus the selected topic count."""

    rows: list[dict]
    selected_k: int | None
    rule: str = "first-local-maximum"

    def to_dict(self) -> dict:
        return {"rows": self.rows, "selected_k": self.selected_k,
                "rule": self.rule}


def sweep_k(config: PipelineConfig) -> SweepReport:
    """Run the fused pipeline at each k and pick the coherence cut-off.

    The selected k is the smallest one whose fused coherence is not
    exceeded by the next k on the grid (first local maximum); if the
    curve rises through the whole grid the largest k wins. Failed k
    values are recorded and excluded from selection. The sentiment
    stage is skipped: it does not depend on k.
    """
    if not config.k_sweep:
        raise PipelineError("stage sweep: k_sweep is empty")
    corpus, _ = _stage("preprocess", _load_corpus, config)

    def load_embedding_rows():
        return load_embeddings(config.embeddings_path).subset(corpus.ids)

    h_matrix = _stage("embeddings", load_embedding_rows)
    stats = _stage("metrics", CooccurrenceStats.from_documents,
                   [d.tokens for d in corpus.docs], COHERENCE_WINDOW)

    rows = []
    for k in sorted(config.k_sweep):
        try:
            lda_params = LdaHyperParams(
                k=k,
                alpha=config.lda.alpha,
                beta=config.lda.beta,
                iterations=config.lda.iterations,
                burn_in=config.lda.burn_in,
                seed=config.lda.seed,
                average_after_burn_in=config.lda.average_after_burn_in,
            )
            model = train_lda(corpus, lda_params)
            fused = fuse(model.theta, h_matrix, config.fusion, ids=corpus.ids)
            ae = train_autoencoder(fused, config.autoencoder)
            latent = encode(ae, fused.data)
            km = kmeans(latent, config.kmeans_config(k))
            lda_terms = [top_words(model, t, config.top_n) for t in range(k)]
            cl_terms = [
                [w for w, _ in terms]
                for terms in cluster_top_terms(km, corpus, n=config.top_n)
            ]
            lda_cv, _ = _mean_coherence(lda_terms, stats)
            cl_cv, _ = _mean_coherence(cl_terms, stats)
            rows.append({
                "k": k,
                "lda_coherence": float(np.mean(lda_cv)),
                "fused_coherence": float(np.mean(cl_cv)),
                "silhouette": silhouette(latent, km.assignments),
            })
        except Exception as exc:
            rows.append({"k": k, "error": f"{exc}"})

    ok = [(r["k"], r["fused_coherence"]) for r in rows if "error" not in r]
    return SweepReport(rows=rows, selected_k=select_cutoff(ok))


def select_cutoff(points: list[tuple[int, float]]) -> int | None:
    """Smallest k whose coherence the next grid point does not beat.

    Points are (k, coherence) pairs; they are considered in ascending
    k order. A rising curve with no interior maximum selects the
    largest k. Empty input selects nothing.
    """
    points = sorted(points)
    if not points:
        return None
    for i in range(len(points) - 1):
        if points[i][1] >= points[i + 1][1]:
            return points[i][0]
    return points[-1][0]
