"""Command-line interface: stage commands plus full-pipeline orchestration."""

from __future__ import annotations

import functools
import json
from pathlib import Path

import click

from . import __version__
from .autoencoder import AeConfig, AeModel, encode, train_autoencoder, write_loss_csv
from .clustering import KMeansConfig, kmeans
from .corpus import (
    Corpus,
    Vocabulary,
    build_vocabulary,
    preprocess_corpus,
    read_corpus,
    read_tokens_jsonl,
    write_tokens_jsonl,
)
from .embeddings import (
    default_endpoint,
    fetch_embeddings,
    load_embeddings,
    write_jsonl,
    write_tbem,
)
from .fusion import FusionConfig, fuse, load_fused, save_fused
from .lda import LdaHyperParams, LdaModel, top_words, train_lda
from .pipeline import PipelineConfig, run_pipeline, sweep_k
from .sentiment import (
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
from .synth import generate_fixture


def _friendly(fn):
    """Convert package errors into clean CLI failures (exit code 1)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, RuntimeError, OSError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _load_config(config_path, seed, out):
    path = Path(config_path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise click.ClickException(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise click.ClickException("config root must be a JSON object")
    if seed is not None:
        raw["seed"] = seed
        for section in ("lda", "autoencoder", "kmeans", "sentiment"):
            if isinstance(raw.get(section), dict):
                raw[section].pop("seed", None)
    if out is not None:
        raw.setdefault("paths", {})["out"] = str(Path(out).resolve())
    return PipelineConfig.from_dict(raw, base_dir=path.parent)


@click.group()
@click.version_option(__version__, prog_name="tbert")
def main():
    """Topic modeling over fused LDA + sentence-embedding vectors."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Pipeline config JSON.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--out", type=click.Path(), default=None, help="Override the output directory.")
@_friendly
def run(config_path, seed, out):
    """Run the full pipeline and write all artifacts."""
    config = _load_config(config_path, seed, out)
    artifacts = run_pipeline(config)
    for name in sorted(artifacts):
        click.echo(f"wrote {artifacts[name]}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Pipeline config JSON.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--out", type=click.Path(), default=None, help="Directory for sweep.json.")
@_friendly
def sweep(config_path, seed, out):
    """Sweep k over the configured grid and select the cut-off."""
    config = _load_config(config_path, seed, out)
    report = sweep_k(config)
    click.echo(f"{'k':>4}  {'lda_cv':>8}  {'fused_cv':>8}  {'silhouette':>10}")
    for row in report.rows:
        if "error" in row:
            click.echo(f"{row['k']:>4}  failed: {row['error']}")
        else:
            click.echo(
                f"{row['k']:>4}  {row['lda_coherence']:>8.4f}  "
                f"{row['fused_coherence']:>8.4f}  {row['silhouette']:>10.4f}"
            )
    click.echo(f"selected k = {report.selected_k} ({report.rule})")
    out_dir = Path(out) if out is not None else Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    click.echo(f"wrote {path}")


@main.command()
@click.option("--out", required=True, type=click.Path(), help="Fixture directory.")
@click.option("--seed", type=int, default=0, help="Fixture seed.")
@_friendly
def synth(out, seed):
    """Generate the synthetic fixture corpus, embeddings, and labels."""
    paths = generate_fixture(out, seed=seed)
    for name in ("corpus", "embeddings", "labels", "config"):
        click.echo(f"wrote {paths[name]}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(), help="Corpus CSV or JSONL.")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--min-df", type=int, default=2, show_default=True, help="Minimum document frequency.")
@click.option("--max-df-fraction", type=float, default=0.5, show_default=True, help="Maximum document-frequency fraction.")
@_friendly
def preprocess(in_path, out, min_df, max_df_fraction):
    """Clean and tokenize a corpus; write tokens and vocabulary."""
    raw_docs = read_corpus(in_path)
    processed = preprocess_corpus(raw_docs)
    kept = [d for d in processed if d.tokens]
    if not kept:
        raise click.ClickException("no documents with tokens after preprocessing")
    vocab = build_vocabulary(kept, min_df=min_df, max_df_fraction=max_df_fraction)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tokens_path = out_dir / "tokens.jsonl"
    vocab_path = out_dir / "vocabulary.json"
    write_tokens_jsonl(kept, tokens_path)
    vocab.save(vocab_path)
    click.echo(
        f"documents: {len(raw_docs)} in, {len(kept)} kept "
        f"({len(processed) - len(kept)} empty after cleaning)"
    )
    click.echo(f"vocabulary: {len(vocab.terms)} terms")
    click.echo(f"wrote {tokens_path}")
    click.echo(f"wrote {vocab_path}")


@main.command()
@click.option("--tokens", "tokens_path", required=True, type=click.Path(), help="tokens.jsonl from preprocess.")
@click.option("--vocab", "vocab_path", required=True, type=click.Path(), help="vocabulary.json from preprocess.")
@click.option("--out", required=True, type=click.Path(), help="Model JSON path.")
@click.option("--k", required=True, type=int, help="Number of topics.")
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--beta", type=float, default=0.01, show_default=True)
@click.option("--iterations", type=int, default=1000, show_default=True)
@click.option("--burn-in", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--top", "top_n", type=int, default=10, show_default=True, help="Top words to print per topic.")
@_friendly
def lda(tokens_path, vocab_path, out, k, alpha, beta, iterations, burn_in, seed, top_n):
    """Train the collapsed Gibbs topic model."""
    docs = read_tokens_jsonl(tokens_path)
    vocab = Vocabulary.load(vocab_path)
    corpus = Corpus(docs=docs, vocabulary=vocab)
    params = LdaHyperParams(k=k, alpha=alpha, beta=beta, iterations=iterations,
                            burn_in=burn_in, seed=seed)
    model = train_lda(corpus, params)
    model.save(out)
    for t in range(k):
        click.echo(f"topic {t}: {' '.join(top_words(model, t, top_n))}")
    click.echo(f"wrote {out}")


@main.command(name="embed-fetch")
@click.option("--in", "in_path", required=True, type=click.Path(), help="Corpus CSV or JSONL.")
@click.option("--out", required=True, type=click.Path(), help="Output TBEM path.")
@click.option("--endpoint", default=None, help="Embedding server URL (default: TBERT_EMBED_ENDPOINT).")
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--timeout", type=float, default=60.0, show_default=True, help="Per-request timeout in seconds.")
@_friendly
def embed_fetch(in_path, out, endpoint, batch_size, timeout):
    """Fetch embeddings for a corpus from the HTTP embedding server."""
    endpoint = endpoint or default_endpoint()
    if not endpoint:
        raise click.ClickException(
            "no endpoint: pass --endpoint or set TBERT_EMBED_ENDPOINT"
        )
    docs = read_corpus(in_path)
    matrix = fetch_embeddings(
        endpoint,
        [d.text for d in docs],
        batch_size=batch_size,
        ids=[d.id for d in docs],
        timeout=timeout,
    )
    write_tbem(matrix, out)
    click.echo(f"fetched {len(matrix.ids)} vectors of dim {matrix.dim}")
    click.echo(f"wrote {out}")


@main.command(name="embed-convert")
@click.option("--in", "in_path", required=True, type=click.Path(), help="Embeddings file (TBEM or JSONL).")
@click.option("--out", required=True, type=click.Path(), help="Output path; format chosen by extension.")
@_friendly
def embed_convert(in_path, out):
    """Convert embeddings between the binary and JSONL formats."""
    matrix = load_embeddings(in_path)
    if str(out).endswith(".jsonl"):
        write_jsonl(matrix, out)
    else:
        write_tbem(matrix, out)
    click.echo(f"wrote {out} ({len(matrix.ids)} rows, dim {matrix.dim})")


@main.command(name="fuse")
@click.option("--model", "model_path", required=True, type=click.Path(), help="LDA model JSON.")
@click.option("--embeddings", "embeddings_path", required=True, type=click.Path(), help="Embeddings file.")
@click.option("--out", required=True, type=click.Path(), help="Fused TBEM path (sidecar JSON added).")
@click.option("--gamma", type=float, default=15.0, show_default=True)
@click.option("--normalize/--no-normalize", default=True, show_default=True, help="L2-normalize embeddings before fusion.")
@_friendly
def fuse_cmd(model_path, embeddings_path, out, gamma, normalize):
    """Concatenate gamma-scaled topic mixtures with embeddings."""
    model = LdaModel.load(model_path)
    matrix = load_embeddings(embeddings_path).subset(model.doc_ids)
    fused = fuse(model.theta, matrix, FusionConfig(gamma=gamma, normalize=normalize),
                 ids=model.doc_ids)
    save_fused(fused, out)
    click.echo(f"wrote {out} ({len(model.doc_ids)} rows, dim {fused.k + fused.d})")


@main.command(name="ae-train")
@click.option("--in", "in_path", required=True, type=click.Path(), help="Fused TBEM file.")
@click.option("--out", required=True, type=click.Path(), help="Autoencoder model JSON.")
@click.option("--latent-dim", type=int, default=64, show_default=True)
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--batch-size", type=int, default=128, show_default=True)
@click.option("--learning-rate", type=float, default=1e-3, show_default=True)
@click.option("--l1", type=float, default=1e-4, show_default=True)
@click.option("--l2", type=float, default=0.0, show_default=True)
@click.option("--dropout", type=float, default=0.01, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--loss-csv", type=click.Path(), default=None, help="Optional per-epoch loss CSV.")
@_friendly
def ae_train(in_path, out, latent_dim, epochs, batch_size, learning_rate,
             l1, l2, dropout, seed, loss_csv):
    """Train the reconstruction autoencoder on fused vectors."""
    fused = load_fused(in_path)
    config = AeConfig(latent_dim=latent_dim, epochs=epochs, batch_size=batch_size,
                      learning_rate=learning_rate, l1=l1, l2=l2, dropout=dropout,
                      seed=seed)
    model = train_autoencoder(fused, config)
    model.save(out)
    if loss_csv is not None:
        write_loss_csv(model, loss_csv)
        click.echo(f"wrote {loss_csv}")
    click.echo(
        f"final train loss {model.train_loss[-1]:.6f}, "
        f"val loss {model.val_loss[-1]:.6f}"
    )
    click.echo(f"wrote {out}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(), help="Fused TBEM file.")
@click.option("--ae", "ae_path", required=True, type=click.Path(), help="Autoencoder model JSON.")
@click.option("--k", required=True, type=int, help="Number of clusters.")
@click.option("--out", required=True, type=click.Path(), help="Assignments CSV path.")
@click.option("--max-iters", type=int, default=300, show_default=True)
@click.option("--n-init", type=int, default=10, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_friendly
def cluster(in_path, ae_path, k, out, max_iters, n_init, tol, seed):
    """Encode fused vectors and cluster the latent space."""
    fused = load_fused(in_path)
    ae = AeModel.load(ae_path)
    latent = encode(ae, fused.data)
    km = kmeans(latent, KMeansConfig(k=k, max_iters=max_iters, n_init=n_init,
                                     tol=tol, seed=seed))
    ids = fused.ids if fused.ids is not None else [str(i) for i in range(len(latent))]
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,cluster\r\n")
        for doc_id, c in zip(ids, km.assignments):
            fh.write(f"{doc_id},{int(c)}\r\n")
    click.echo(f"inertia {km.inertia:.4f}")
    click.echo(f"wrote {out}")


@main.command(name="sentiment-train")
@click.option("--embeddings", "embeddings_path", required=True, type=click.Path())
@click.option("--labels", "labels_path", required=True, type=click.Path(), help="CSV with id,label rows.")
@click.option("--out", required=True, type=click.Path(), help="Classifier model JSON.")
@click.option("--label-map", "label_map_path", type=click.Path(), default=None, help="JSON mapping raw labels to the canonical classes.")
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--learning-rate", type=float, default=1e-3, show_default=True)
@click.option("--weight-decay", type=float, default=0.0, show_default=True)
@click.option("--epsilon", type=float, default=1e-8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_friendly
def sentiment_train(embeddings_path, labels_path, out, label_map_path, epochs,
                    batch_size, learning_rate, weight_decay, epsilon, seed):
    """Train the softmax sentiment head on labeled embeddings."""
    matrix = load_embeddings(embeddings_path)
    labels = read_labels_csv(labels_path)
    if label_map_path is not None:
        labels = apply_label_map(labels, read_label_map(label_map_path))
    known = set(matrix.ids)
    labels = {i: v for i, v in labels.items() if i in known}
    labeled = labeled_set_for(matrix, labels)
    config = SentimentTrainConfig(epochs=epochs, batch_size=batch_size,
                                  learning_rate=learning_rate,
                                  weight_decay=weight_decay, epsilon=epsilon,
                                  seed=seed)
    model = train_classifier(labeled, config)
    model.save(out)
    report = evaluate(model, labeled)
    click.echo(f"training accuracy {report.accuracy:.4f}, "
               f"weighted F1 {report.weighted_f1:.4f} "
               f"on {len(labels)} labeled rows")
    click.echo(f"wrote {out}")


@main.command(name="sentiment-predict")
@click.option("--embeddings", "embeddings_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path(), help="Classifier model JSON.")
@click.option("--out", required=True, type=click.Path(), help="Predictions CSV path.")
@_friendly
def sentiment_predict(embeddings_path, model_path, out):
    """Predict sentiment classes for every embedded document."""
    matrix = load_embeddings(embeddings_path)
    model = SentimentModel.load(model_path)
    classes, probs = predict(model, matrix)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,sentiment,p_positive,p_negative,p_neutral\r\n")
        for i, doc_id in enumerate(matrix.ids):
            p = [repr(float(v)) for v in probs[i]]
            fh.write(f"{doc_id},{classes[i]},{p[0]},{p[1]},{p[2]}\r\n")
    click.echo(f"wrote {out} ({len(matrix.ids)} rows)")


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Pipeline output directory.")
@_friendly
def report(out_dir):
    """Print a readable summary of a finished run's report.json."""
    path = Path(out_dir) / "report.json"
    if not path.exists():
        raise click.ClickException(f"no report.json in {out_dir}")
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    metrics = payload.get("metrics", {})
    stages = payload.get("stages", {})
    pre = stages.get("preprocess", {})
    click.echo(
        f"documents: {pre.get('documents_kept', '?')} "
        f"(vocabulary {pre.get('vocabulary_size', '?')} terms)"
    )
    lda_m = metrics.get("lda", {})
    cl_m = metrics.get("clusters", {})
    sil = metrics.get("silhouette", {})
    click.echo(
        f"coherence C_V: lda {lda_m.get('mean_cv', float('nan')):.4f}, "
        f"fused clusters {cl_m.get('mean_cv', float('nan')):.4f}"
    )
    click.echo(
        f"silhouette: raw {sil.get('raw_embedding', float('nan')):.4f}, "
        f"fused latent {sil.get('fused_latent', float('nan')):.4f}"
    )
    classification = metrics.get("classification")
    if classification:
        click.echo(
            f"classification: accuracy {classification['accuracy']:.4f}, "
            f"weighted F1 {classification['weighted_f1']:.4f}"
        )
    for entry in payload.get("clusters", []):
        fr = entry["fractions"]
        terms = " ".join(entry["top_terms"][:8])
        click.echo(
            f"cluster {entry['cluster']}: n={entry['size']}, "
            f"pos {fr['positive']:.2f} neg {fr['negative']:.2f} "
            f"neu {fr['neutral']:.2f} | {terms}"
        )


if __name__ == "__main__":
    main()
