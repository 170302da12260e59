"""Configuration parsing, sweep selection, the join, and full runs."""

import csv
import json
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tbert.pipeline as pl
from tbert.pipeline import (
    ARTIFACT_NAMES,
    ConfigError,
    PipelineConfig,
    PipelineError,
    join_topics_sentiments,
    run_pipeline,
    select_cutoff,
    sweep_k,
)
from tbert.sentiment import CLASSES


def minimal_raw(**extra):
    raw = {"paths": {"corpus": "corpus.csv", "embeddings": "vectors.tbem"}}
    raw.update(extra)
    return raw


class TestConfigParsing:
    def test_defaults_materialize(self, tmp_path):
        cfg = PipelineConfig.from_dict(minimal_raw(), base_dir=tmp_path)
        assert cfg.seed == 0
        assert cfg.lda.k == 8
        assert cfg.lda.alpha == 0.1
        assert cfg.lda.beta == 0.01
        assert cfg.lda.iterations == 1000
        assert cfg.lda.burn_in == 200
        assert cfg.lda.average_after_burn_in is False
        assert cfg.fusion.gamma == 15.0
        assert cfg.fusion.normalize is True
        assert cfg.autoencoder.latent_dim == 64
        assert cfg.autoencoder.epochs == 50
        assert cfg.autoencoder.batch_size == 128
        assert cfg.autoencoder.learning_rate == 1e-3
        assert cfg.autoencoder.l1 == 1e-4
        assert cfg.autoencoder.l2 == 0.0
        assert cfg.autoencoder.dropout == 0.01
        assert cfg.kmeans_max_iters == 300
        assert cfg.kmeans_n_init == 10
        assert cfg.kmeans_tol == 1e-6
        assert cfg.sentiment.epochs == 10
        assert cfg.sentiment.batch_size == 32
        assert cfg.min_df == 2
        assert cfg.max_df_fraction == 0.5
        assert cfg.top_n == 10
        assert cfg.k_sweep == [5, 6, 7, 8, 10, 12, 15, 17]
        assert cfg.labels_path is None
        assert cfg.label_map_path is None
        assert cfg.sentiment_model_path is None

    def test_seeds_derive_from_master(self, tmp_path):
        cfg = PipelineConfig.from_dict(minimal_raw(seed=42), base_dir=tmp_path)
        assert cfg.seed == 42
        assert cfg.lda.seed == 53
        assert cfg.autoencoder.seed == 54
        assert cfg.kmeans_seed == 55
        assert cfg.sentiment.seed == 56

    def test_stage_seed_override_wins(self, tmp_path):
        raw = minimal_raw(seed=42, lda={"seed": 7})
        cfg = PipelineConfig.from_dict(raw, base_dir=tmp_path)
        assert cfg.lda.seed == 7
        assert cfg.autoencoder.seed == 54

    def test_relative_paths_resolve_against_base(self, tmp_path):
        cfg = PipelineConfig.from_dict(minimal_raw(), base_dir=tmp_path)
        assert cfg.corpus_path == str((tmp_path / "corpus.csv").resolve())
        assert cfg.embeddings_path == str((tmp_path / "vectors.tbem").resolve())
        assert cfg.out_dir == str((tmp_path / "out").resolve())

    def test_absolute_path_ignores_base(self, tmp_path):
        raw = minimal_raw()
        raw["paths"]["corpus"] = "/data/elsewhere/docs.csv"
        cfg = PipelineConfig.from_dict(raw, base_dir=tmp_path)
        assert cfg.corpus_path == "/data/elsewhere/docs.csv"

    def test_unknown_top_level_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown top-level config keys.*'ldaa'"):
            PipelineConfig.from_dict(minimal_raw(ldaa={}), base_dir=tmp_path)

    def test_unknown_section_key_rejected(self, tmp_path):
        raw = minimal_raw(lda={"topics": 8})
        with pytest.raises(ConfigError, match="unknown keys in config section 'lda'.*'topics'"):
            PipelineConfig.from_dict(raw, base_dir=tmp_path)

    def test_unknown_path_key_rejected(self, tmp_path):
        raw = minimal_raw()
        raw["paths"]["embedings"] = "typo.tbem"
        with pytest.raises(ConfigError, match="'paths'.*'embedings'"):
            PipelineConfig.from_dict(raw, base_dir=tmp_path)

    def test_section_must_be_object(self, tmp_path):
        with pytest.raises(ConfigError, match="section 'lda' must be an object"):
            PipelineConfig.from_dict(minimal_raw(lda=[1, 2]), base_dir=tmp_path)

    def test_root_must_be_object(self):
        with pytest.raises(ConfigError, match="root must be a JSON object"):
            PipelineConfig.from_dict(["not", "a", "dict"])

    def test_required_paths(self, tmp_path):
        with pytest.raises(ConfigError, match=r"paths\.corpus is required"):
            PipelineConfig.from_dict({"paths": {"embeddings": "v.tbem"}}, base_dir=tmp_path)
        with pytest.raises(ConfigError, match=r"paths\.embeddings is required"):
            PipelineConfig.from_dict({"paths": {"corpus": "c.csv"}}, base_dir=tmp_path)
        with pytest.raises(ConfigError, match=r"paths\.corpus is required"):
            PipelineConfig.from_dict({}, base_dir=tmp_path)

    def test_sentiment_batch_size_null_means_full_batch(self, tmp_path):
        raw = minimal_raw(sentiment={"batch_size": None})
        cfg = PipelineConfig.from_dict(raw, base_dir=tmp_path)
        assert cfg.sentiment.batch_size is None

    def test_to_dict_is_a_fixed_point(self, tmp_path):
        raw = minimal_raw(
            seed=3,
            lda={"k": 5, "iterations": 50, "burn_in": 10},
            fusion={"gamma": 2.5, "normalize": False},
            sentiment={"batch_size": None},
            k_sweep=[4, 5],
        )
        raw["paths"]["labels"] = "labels.csv"
        first = PipelineConfig.from_dict(raw, base_dir=tmp_path).to_dict()
        second = PipelineConfig.from_dict(first, base_dir="/nowhere").to_dict()
        assert second == first

    def test_from_file_resolves_against_config_dir(self, tmp_path):
        nested = tmp_path / "conf"
        nested.mkdir()
        path = nested / "run.json"
        path.write_text(json.dumps(minimal_raw()), encoding="utf-8")
        cfg = PipelineConfig.from_file(path)
        assert cfg.corpus_path == str((nested / "corpus.csv").resolve())

    def test_from_file_missing(self, tmp_path):
        with pytest.raises(ConfigError, match="config file not found"):
            PipelineConfig.from_file(tmp_path / "absent.json")

    def test_from_file_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="is not valid JSON"):
            PipelineConfig.from_file(path)

    def test_kmeans_config_carries_settings(self, tmp_path):
        raw = minimal_raw(kmeans={"max_iters": 17, "n_init": 3, "tol": 0.5, "seed": 9})
        cfg = PipelineConfig.from_dict(raw, base_dir=tmp_path)
        km = cfg.kmeans_config(4)
        assert km.k == 4
        assert km.max_iters == 17
        assert km.n_init == 3
        assert km.tol == 0.5
        assert km.seed == 9


class TestSelectCutoff:
    def test_empty_selects_nothing(self):
        assert select_cutoff([]) is None

    def test_single_point(self):
        assert select_cutoff([(8, 0.4)]) == 8

    def test_rising_curve_selects_largest(self):
        assert select_cutoff([(5, 0.1), (6, 0.2), (7, 0.3)]) == 7

    def test_interior_maximum(self):
        assert select_cutoff([(5, 0.1), (6, 0.5), (7, 0.3), (8, 0.6)]) == 6

    def test_plateau_breaks_at_first_point(self):
        assert select_cutoff([(5, 0.1), (6, 0.4), (7, 0.4), (8, 0.9)]) == 6

    def test_falling_curve_selects_first(self):
        assert select_cutoff([(5, 0.9), (6, 0.5), (7, 0.1)]) == 5

    def test_input_order_irrelevant(self):
        assert select_cutoff([(7, 0.3), (5, 0.1), (6, 0.5)]) == 6

    @given(
        st.lists(
            st.tuples(st.integers(min_value=1, max_value=50),
                      st.floats(min_value=-1.0, max_value=1.0)),
            min_size=1, max_size=12, unique_by=lambda p: p[0],
        )
    )
    @settings(max_examples=100, deadline=None)
    def test_matches_first_local_maximum_definition(self, points):
        ordered = sorted(points)
        candidates = [
            ordered[i][0]
            for i in range(len(ordered) - 1)
            if ordered[i][1] >= ordered[i + 1][1]
        ]
        expected = candidates[0] if candidates else ordered[-1][0]
        assert select_cutoff(points) == expected


class TestJoin:
    def test_two_to_one_split(self):
        report = join_topics_sentiments(
            {"a": 0, "b": 0, "c": 0},
            {"a": "positive", "b": "positive", "c": "negative"},
        )
        assert set(report) == {"0"}
        entry = report["0"]
        assert entry["size"] == 3
        assert entry["counts"] == {"positive": 2, "negative": 1, "neutral": 0}
        assert entry["fractions"]["positive"] == pytest.approx(2 / 3, abs=1e-12)
        assert entry["fractions"]["negative"] == pytest.approx(1 / 3, abs=1e-12)
        assert entry["fractions"]["neutral"] == 0.0

    def test_fractions_sum_to_one_per_cluster(self):
        assignments = {f"d{i}": i % 3 for i in range(30)}
        sentiments = {f"d{i}": CLASSES[i % 2] for i in range(30)}
        report = join_topics_sentiments(assignments, sentiments)
        assert set(report) == {"0", "1", "2"}
        for entry in report.values():
            assert sum(entry["fractions"].values()) == pytest.approx(1.0, abs=1e-12)
            assert sum(entry["counts"].values()) == entry["size"]

    def test_clusters_ordered_numerically(self):
        assignments = {"a": 10, "b": 2, "c": 5}
        sentiments = {"a": "neutral", "b": "neutral", "c": "neutral"}
        report = join_topics_sentiments(assignments, sentiments)
        assert list(report) == ["2", "5", "10"]

    def test_mismatched_ids_listed_both_ways(self):
        assignments = {"shared": 0, "only-cluster": 0}
        sentiments = {"shared": "positive", "only-sentiment": "negative"}
        with pytest.raises(ValueError) as exc:
            join_topics_sentiments(assignments, sentiments)
        message = str(exc.value)
        assert "ids without sentiment: ['only-cluster']" in message
        assert "ids without cluster: ['only-sentiment']" in message

    def test_mismatch_listing_truncates_to_ten(self):
        assignments = {f"x{i:02d}": 0 for i in range(12)}
        assignments["shared"] = 0
        sentiments = {"shared": "positive"}
        with pytest.raises(ValueError) as exc:
            join_topics_sentiments(assignments, sentiments)
        message = str(exc.value)
        assert "x00" in message and "x09" in message
        assert "x10" not in message

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError, match="empty assignment or sentiment"):
            join_topics_sentiments({}, {"a": "positive"})
        with pytest.raises(ValueError, match="empty assignment or sentiment"):
            join_topics_sentiments({"a": 0}, {})


@pytest.fixture(scope="module")
def pipeline_run(fixture_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline-out")
    config = replace(fixture_config, out_dir=str(out))
    artifacts = run_pipeline(config)
    return config, artifacts


def read_artifact(artifacts, name):
    path = Path(artifacts[name])
    if name.endswith(".json"):
        return json.loads(path.read_text(encoding="utf-8"))
    return path.read_bytes()


class TestFullRun:
    def test_all_artifacts_written(self, pipeline_run):
        config, artifacts = pipeline_run
        assert set(artifacts) == set(ARTIFACT_NAMES)
        for path in artifacts.values():
            assert Path(path).is_file()
            assert Path(path).parent == Path(config.out_dir)

    def test_json_artifacts_end_with_newline(self, pipeline_run):
        _, artifacts = pipeline_run
        for name in artifacts:
            if name.endswith(".json"):
                raw = Path(artifacts[name]).read_bytes()
                assert raw.endswith(b"}\n")

    def test_report_config_echo_reproduces_itself(self, pipeline_run):
        config, artifacts = pipeline_run
        report = read_artifact(artifacts, "report.json")
        echoed = report["config"]
        assert echoed == config.to_dict()
        reparsed = PipelineConfig.from_dict(echoed, base_dir="/elsewhere")
        assert reparsed.to_dict() == echoed

    def test_stage_summaries(self, pipeline_run):
        config, artifacts = pipeline_run
        stages = read_artifact(artifacts, "report.json")["stages"]
        assert stages["preprocess"]["documents_in"] == 800
        assert stages["preprocess"]["documents_kept"] == 800
        assert stages["preprocess"]["dropped_empty"] == 0
        assert stages["preprocess"]["vocabulary_size"] > 0
        assert stages["embeddings"] == {"rows": 800, "dim": 32}
        assert stages["lda"]["seed"] == config.lda.seed
        assert stages["lda"]["k"] == 8
        assert stages["lda"]["log_likelihood"] < 0
        assert stages["fusion"]["gamma"] == 8.0
        assert stages["fusion"]["normalize"] is False
        assert stages["fusion"]["dim"] == 8 + 32
        assert stages["autoencoder"]["latent_dim"] == 16
        assert stages["autoencoder"]["final_train_loss"] > 0
        assert stages["kmeans"]["k"] == 8
        assert stages["kmeans"]["inertia"] > 0
        assert stages["sentiment"]["mode"] == "trained"
        assert stages["sentiment"]["labeled_docs"] == 800

    def test_metrics_artifact_matches_report(self, pipeline_run):
        _, artifacts = pipeline_run
        metrics = read_artifact(artifacts, "metrics.json")
        report = read_artifact(artifacts, "report.json")
        assert metrics == report["metrics"]

    def test_metrics_structure(self, pipeline_run):
        _, artifacts = pipeline_run
        metrics = read_artifact(artifacts, "metrics.json")
        assert len(metrics["lda"]["per_topic_cv"]) == 8
        assert len(metrics["clusters"]["per_cluster_cv"]) == 8
        for block, key in (("lda", "per_topic_cv"), ("clusters", "per_cluster_cv")):
            for value in metrics[block][key]:
                assert -1.0 <= value <= 1.0
        for key in ("fused_latent", "raw_embedding"):
            assert -1.0 <= metrics["silhouette"][key] <= 1.0
        assert metrics["kmeans"]["k"] == 8
        assert metrics["kmeans"]["inertia"] > 0

    def test_classification_block(self, pipeline_run):
        _, artifacts = pipeline_run
        block = read_artifact(artifacts, "metrics.json")["classification"]
        assert block is not None
        assert block["num_labeled"] == 800
        assert 0.0 < block["accuracy"] <= 1.0
        assert 0.0 < block["weighted_f1"] <= 1.0
        assert block["confusion"]["classes"] == list(CLASSES)
        matrix = block["confusion"]["matrix"]
        assert sum(sum(row) for row in matrix) == 800
        for cls, value in block["per_class_accuracy"].items():
            assert cls in CLASSES
            assert 0.0 <= value <= 1.0

    def test_topics_artifact(self, pipeline_run):
        _, artifacts = pipeline_run
        topics = read_artifact(artifacts, "topics.json")
        assert topics["k"] == 8
        assert [t["topic"] for t in topics["topics"]] == list(range(8))
        for entry in topics["topics"]:
            probs = [w["prob"] for w in entry["words"]]
            assert len(probs) == 10
            assert all(0 < p <= 1 for p in probs)
            assert probs == sorted(probs, reverse=True)

    def test_assignments_artifact(self, pipeline_run, fixture_dir):
        _, artifacts = pipeline_run
        raw = read_artifact(artifacts, "assignments.csv")
        assert b"\r\n" in raw
        rows = list(csv.reader(raw.decode("utf-8").splitlines()))
        assert rows[0] == ["id", "cluster"]
        body = rows[1:]
        assert len(body) == 800
        with open(fixture_dir / "labels.csv", encoding="utf-8", newline="") as fh:
            labeled_ids = {r["id"] for r in csv.DictReader(fh)}
        assert {r[0] for r in body} == labeled_ids
        assert {int(r[1]) for r in body} <= set(range(8))

    def test_sentiment_artifact(self, pipeline_run):
        _, artifacts = pipeline_run
        raw = read_artifact(artifacts, "sentiment.csv")
        assert b"\r\n" in raw
        rows = list(csv.DictReader(raw.decode("utf-8").splitlines()))
        assert len(rows) == 800
        assignments = {
            r[0]: int(r[1])
            for r in csv.reader(
                read_artifact(artifacts, "assignments.csv").decode("utf-8").splitlines()
            )
            if r[0] != "id"
        }
        for row in rows:
            assert row["sentiment"] in CLASSES
            assert int(row["cluster"]) == assignments[row["id"]]
            total = (float(row["p_positive"]) + float(row["p_negative"])
                     + float(row["p_neutral"]))
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_wordcloud_artifact(self, pipeline_run):
        _, artifacts = pipeline_run
        clouds = read_artifact(artifacts, "wordcloud_freqs.json")
        assert set(clouds["topics"]) == {str(t) for t in range(8)}
        assert set(clouds["clusters"]) <= {str(c) for c in range(8)}
        for freqs in clouds["topics"].values():
            assert 0 < len(freqs) <= 50
            assert all(v > 0 for v in freqs.values())
        for freqs in clouds["clusters"].values():
            assert len(freqs) <= 50
            assert all(isinstance(v, int) and v > 0 for v in freqs.values())

    def test_report_clusters_agree_with_csv_artifacts(self, pipeline_run):
        _, artifacts = pipeline_run
        assignments = {
            r[0]: int(r[1])
            for r in csv.reader(
                read_artifact(artifacts, "assignments.csv").decode("utf-8").splitlines()
            )
            if r[0] != "id"
        }
        sentiments = {
            row["id"]: row["sentiment"]
            for row in csv.DictReader(
                read_artifact(artifacts, "sentiment.csv").decode("utf-8").splitlines()
            )
        }
        recomputed = join_topics_sentiments(assignments, sentiments)
        report = read_artifact(artifacts, "report.json")
        assert sum(c["size"] for c in report["clusters"]) == 800
        for entry in report["clusters"]:
            cid = str(entry["cluster"])
            if entry["size"] == 0:
                assert cid not in recomputed
                continue
            want = recomputed[cid]
            assert entry["size"] == want["size"]
            assert entry["counts"] == want["counts"]
            for cls in CLASSES:
                assert entry["fractions"][cls] == pytest.approx(
                    want["fractions"][cls], abs=1e-12
                )


class TestRunFailures:
    def test_missing_corpus_names_stage(self, fixture_config, tmp_path):
        config = replace(
            fixture_config,
            corpus_path=str(tmp_path / "gone.csv"),
            out_dir=str(tmp_path / "out"),
        )
        with pytest.raises(PipelineError, match="stage preprocess"):
            run_pipeline(config)

    def test_missing_embeddings_names_stage(self, fixture_config, tmp_path):
        config = replace(
            fixture_config,
            embeddings_path=str(tmp_path / "gone.tbem"),
            out_dir=str(tmp_path / "out"),
        )
        with pytest.raises(PipelineError, match="stage embeddings"):
            run_pipeline(config)

    def test_sentiment_needs_labels_or_model(self, fixture_config, tmp_path):
        out = tmp_path / "out"
        config = replace(
            fixture_config,
            labels_path=None,
            sentiment_model_path=None,
            out_dir=str(out),
        )
        with pytest.raises(PipelineError, match=r"stage sentiment.*paths\.labels"):
            run_pipeline(config)
        assert not any((out / name).exists() for name in ARTIFACT_NAMES)

    def test_partial_artifacts_removed_on_write_failure(
        self, fixture_config, tmp_path, monkeypatch
    ):
        real = pl.cluster_top_terms

        def failing(km, corpus, n):
            # only the wordcloud call inside artifact writing should trip
            if n == pl.WORDCLOUD_TERMS:
                raise RuntimeError("wordcloud boom")
            return real(km, corpus, n=n)

        monkeypatch.setattr(pl, "cluster_top_terms", failing)
        out = tmp_path / "out"
        config = replace(fixture_config, out_dir=str(out))
        with pytest.raises(PipelineError, match="stage artifacts: wordcloud boom"):
            run_pipeline(config)
        assert out.exists()
        assert not any(out.iterdir())


class TestSweep:
    def test_failed_k_recorded_and_excluded(self, fixture_config, tmp_path):
        config = replace(fixture_config, k_sweep=[1, 8], out_dir=str(tmp_path))
        report = sweep_k(config)
        assert [row["k"] for row in report.rows] == [1, 8]
        assert "error" in report.rows[0]
        ok = report.rows[1]
        assert set(ok) == {"k", "lda_coherence", "fused_coherence", "silhouette"}
        assert report.selected_k == 8
        assert report.rule == "first-local-maximum"
        payload = report.to_dict()
        assert payload["selected_k"] == 8
        assert payload["rows"] == report.rows

    def test_empty_grid_rejected(self, fixture_config, tmp_path):
        config = replace(fixture_config, k_sweep=[], out_dir=str(tmp_path))
        with pytest.raises(PipelineError, match="k_sweep is empty"):
            sweep_k(config)
