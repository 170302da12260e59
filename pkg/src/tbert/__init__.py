"""Topic/sentiment pipeline: LDA fused with sentence embeddings.

Preprocess text, train LDA by collapsed Gibbs sampling, fuse the topic
mixtures with externally produced sentence embeddings, compress with an
autoencoder, cluster the latent vectors, and score the result with
coherence, silhouette, and classification metrics.
"""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    ProcessedDocument,
    RawDocument,
    Vocabulary,
    build_vocabulary,
    preprocess,
    preprocess_corpus,
    to_bow,
)
from .embeddings import EmbeddingMatrix, fetch_embeddings, load_embeddings, write_tbem
from .fusion import FusedMatrix, FusionConfig, fuse
from .lda import LdaHyperParams, LdaModel, train_lda
from .autoencoder import AeConfig, AeModel, train_autoencoder
from .clustering import ClusterModel, KMeansConfig, cluster_top_terms, kmeans
from .sentiment import (
    LabeledSet,
    SentimentModel,
    SentimentTrainConfig,
    predict,
    train_classifier,
)
from .metrics import (
    ConfusionCounts,
    CooccurrenceStats,
    accuracy,
    cv_coherence,
    f1_score,
    silhouette,
    umass_coherence,
)
from .pipeline import (
    PipelineConfig,
    SweepReport,
    join_topics_sentiments,
    run_pipeline,
    select_cutoff,
    sweep_k,
)
from .synth import generate_fixture, make_fixture

__all__ = [
    "__version__",
    "Corpus",
    "ProcessedDocument",
    "RawDocument",
    "Vocabulary",
    "build_vocabulary",
    "preprocess",
    "preprocess_corpus",
    "to_bow",
    "EmbeddingMatrix",
    "fetch_embeddings",
    "load_embeddings",
    "write_tbem",
    "FusedMatrix",
    "FusionConfig",
    "fuse",
    "LdaHyperParams",
    "LdaModel",
    "train_lda",
    "AeConfig",
    "AeModel",
    "train_autoencoder",
    "ClusterModel",
    "KMeansConfig",
    "cluster_top_terms",
    "kmeans",
    "LabeledSet",
    "SentimentModel",
    "SentimentTrainConfig",
    "predict",
    "train_classifier",
    "ConfusionCounts",
    "CooccurrenceStats",
    "accuracy",
    "cv_coherence",
    "f1_score",
    "silhouette",
    "umass_coherence",
    "PipelineConfig",
    "SweepReport",
    "join_topics_sentiments",
    "run_pipeline",
    "select_cutoff",
    "sweep_k",
    "generate_fixture",
    "make_fixture",
]
