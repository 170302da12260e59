import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tbert.metrics import (
    ConfusionCounts,
    CooccurrenceStats,
    MetricsError,
    accuracy,
    cv_coherence,
    f1_score,
    per_class_accuracy,
    silhouette,
    umass_coherence,
    weighted_f1,
)


def brute_silhouette(data, assignments):
    """Definitional per-point silhouette, quadratic loops."""
    n = len(data)
    labels = sorted(set(assignments))
    total = 0.0
    for i in range(n):
        own = assignments[i]
        own_members = [j for j in range(n) if assignments[j] == own and j != i]
        if not own_members:
            continue
        a = sum(np.linalg.norm(data[i] - data[j]) for j in own_members) / len(own_members)
        b = math.inf
        for other in labels:
            if other == own:
                continue
            members = [j for j in range(n) if assignments[j] == other]
            d = sum(np.linalg.norm(data[i] - data[j]) for j in members) / len(members)
            b = min(b, d)
        total += (b - a) / max(a, b)
    return total / n


class TestConfusion:
    def test_binary_layout(self):
        c = ConfusionCounts.from_binary(tp=50, fp=5, fn=5, tn=40)
        assert c.tp("positive") == 50
        assert c.fp("positive") == 5
        assert c.fn("positive") == 5
        assert c.tn("positive") == 40
        assert c.support("positive") == 55

    def test_from_labels(self):
        c = ConfusionCounts.from_labels(["a", "a", "b"], ["a", "b", "b"])
        assert c.classes == ("a", "b")
        assert c.matrix.tolist() == [[1, 1], [0, 1]]

    def test_length_mismatch(self):
        with pytest.raises(MetricsError):
            ConfusionCounts.from_labels(["a"], [])

    def test_negative_counts_rejected(self):
        with pytest.raises(MetricsError):
            ConfusionCounts(classes=("a", "b"), matrix=np.array([[1, -1], [0, 2]]))

    def test_unknown_class_rejected(self):
        c = ConfusionCounts.from_binary(tp=1, fp=0, fn=0, tn=1)
        with pytest.raises(MetricsError):
            c.tp("mystery")


class TestF1Accuracy:
    def test_f1_worked_example(self):
        # P = 3/4, R = 3/5, harmonic mean lands on exactly 2/3
        c = ConfusionCounts.from_binary(tp=3, fp=1, fn=2, tn=10)
        assert f1_score(c, "positive") == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_f1_equals_p_when_p_equals_r(self):
        c = ConfusionCounts.from_binary(tp=50, fp=5, fn=5, tn=40)
        assert f1_score(c, "positive") == pytest.approx(50 / 55, abs=1e-12)

    def test_accuracy_worked_example(self):
        c = ConfusionCounts.from_binary(tp=50, fp=5, fn=5, tn=40)
        assert accuracy(c) == 0.9

    def test_degenerate_f1_is_zero(self):
        c = ConfusionCounts.from_labels(["a", "a"], ["b", "b"], classes=("a", "b"))
        assert f1_score(c, "a") == 0.0

    def test_accuracy_rejects_empty(self):
        c = ConfusionCounts(classes=("a",), matrix=np.zeros((1, 1), dtype=int))
        with pytest.raises(MetricsError):
            accuracy(c)

    def test_per_class_accuracy_is_recall(self):
        labels = ["p", "p", "n", "n"]
        preds = ["p", "n", "n", "n"]
        assert per_class_accuracy(labels, preds) == {"n": 1.0, "p": 0.5}

    def test_weighted_f1_weights_by_support(self):
        labels = ["a"] * 3 + ["b"]
        preds = ["a"] * 3 + ["a"]
        c = ConfusionCounts.from_labels(labels, preds)
        expected = 0.75 * f1_score(c, "a") + 0.25 * f1_score(c, "b")
        assert weighted_f1(c) == pytest.approx(expected, abs=1e-12)

    @given(st.lists(st.sampled_from("abc"), min_size=1, max_size=60))
    def test_accuracy_matches_counting(self, labels):
        rng = np.random.default_rng(len(labels))
        preds = ["abc"[rng.integers(3)] for _ in labels]
        c = ConfusionCounts.from_labels(labels, preds, classes=("a", "b", "c"))
        naive = sum(1 for t, p in zip(labels, preds) if t == p) / len(labels)
        assert accuracy(c) == pytest.approx(naive, abs=1e-12)

    @given(st.lists(st.sampled_from("ab"), min_size=2, max_size=60))
    def test_f1_matches_counting(self, labels):
        rng = np.random.default_rng(sum(map(ord, labels)))
        preds = ["ab"[rng.integers(2)] for _ in labels]
        c = ConfusionCounts.from_labels(labels, preds, classes=("a", "b"))
        tp = sum(1 for t, p in zip(labels, preds) if t == p == "a")
        fp = sum(1 for t, p in zip(labels, preds) if t == "b" and p == "a")
        fn = sum(1 for t, p in zip(labels, preds) if t == "a" and p == "b")
        if tp + fp == 0 or tp + fn == 0:
            expected = 0.0
        else:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            expected = (
                0.0
                if precision + recall == 0
                else 2 * precision * recall / (precision + recall)
            )
        assert f1_score(c, "a") == pytest.approx(expected, abs=1e-12)


class TestSilhouette:
    def test_two_blob_worked_example(self):
        data = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        labels = np.array([0, 0, 1, 1])
        assert silhouette(data, labels) == pytest.approx(0.900, abs=1e-3)

    def test_identical_points_across_clusters(self):
        data = np.zeros((4, 2))
        labels = np.array([0, 0, 1, 1])
        # a = b = 0 for every point; the 0/0 convention resolves to 0
        assert silhouette(data, labels) == 0.0

    def test_singleton_cluster_scores_zero(self):
        data = np.array([[0.0], [0.2], [9.0]])
        labels = np.array([0, 0, 1])
        expected = brute_silhouette(data, labels)
        assert silhouette(data, labels) == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 40))
        k = int(rng.integers(2, 5))
        data = rng.normal(size=(n, 3))
        labels = rng.integers(0, k, size=n)
        labels[:k] = np.arange(k)
        assert silhouette(data, labels) == pytest.approx(
            brute_silhouette(data, labels), abs=1e-9
        )

    def test_single_cluster_rejected(self):
        with pytest.raises(MetricsError):
            silhouette(np.zeros((3, 2)), np.zeros(3, dtype=int))

    def test_length_mismatch_rejected(self):
        with pytest.raises(MetricsError):
            silhouette(np.zeros((3, 2)), np.array([0, 1]))


class TestCoherence:
    def stats(self, docs, window_size=110):
        return CooccurrenceStats.from_documents(docs, window_size=window_size)

    def test_umass_worked_example(self):
        stats = self.stats([["a", "b"], ["a"]])
        # D(a)=2, D(b)=1, D(a,b)=1: log((1+1)/1) = log 2
        assert umass_coherence(["a", "b"], stats) == pytest.approx(math.log(2))
        assert umass_coherence(["b", "a"], stats) == pytest.approx(math.log(2))

    def test_umass_disjoint_words_negative(self):
        stats = self.stats([["a"], ["a"], ["b"], ["b"], ["b"]])
        # never co-occur, rarer word has D=2: score log(1/2)
        assert umass_coherence(["a", "b"], stats) == pytest.approx(math.log(0.5))

    def test_umass_duplication_converges_to_unsmoothed(self):
        base = [["a", "b", "c"], ["a"], ["b", "c"], ["c"]]
        # ranked c,a,b; pairs (c,a),(c,b),(a,b) with smoothing dropped
        unsmoothed = math.log(1 / 2) + math.log(2 / 2) + math.log(1 / 2)
        gaps = []
        for times in (1, 10, 1000):
            stats = self.stats(base * times)
            gaps.append(abs(umass_coherence(["a", "b", "c"], stats) - unsmoothed))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-2

    def test_umass_needs_scorable_words(self):
        stats = self.stats([["a", "b"]])
        with pytest.raises(MetricsError):
            umass_coherence(["zz", "qq"], stats)

    def test_umass_needs_two_words(self):
        stats = self.stats([["a", "b"]])
        with pytest.raises(MetricsError):
            umass_coherence(["a"], stats)

    def test_cv_perfect_cooccurrence(self):
        stats = self.stats([["a", "b"] for _ in range(6)])
        assert cv_coherence(["a", "b"], stats) == pytest.approx(1.0)

    def test_cv_separated_pair_is_degenerate(self):
        stats = self.stats([["a", "x"]] * 4 + [["b", "y"]] * 4)
        with pytest.warns(UserWarning):
            apart = cv_coherence(["a", "b"], stats)
        assert apart == 0.0
        assert cv_coherence(["a", "x"], stats) == pytest.approx(1.0)

    def test_cv_ranks_mixed_sets_sensibly(self):
        docs = [["a", "b", "c"]] * 6 + [["a", "b"]] * 2 + [["c", "z"]] * 4
        stats = self.stats(docs)
        tight = cv_coherence(["a", "b"], stats)
        loose = cv_coherence(["a", "c", "z"], stats)
        assert -1.0 <= loose < tight <= 1.0

    def test_cv_requires_two_words(self):
        stats = self.stats([["a", "b"]])
        with pytest.raises(MetricsError):
            cv_coherence(["a"], stats)

    def test_cv_unseen_words_warn_to_zero(self):
        stats = self.stats([["a", "b"]])
        with pytest.warns(UserWarning):
            assert cv_coherence(["zz", "qq"], stats) == 0.0

    def test_window_counts_respect_window_size(self):
        docs = [["a"] + ["pad"] * 5 + ["b"]]
        wide = self.stats(docs, window_size=110)
        narrow = self.stats(docs, window_size=2)
        assert wide.window_pair("a", "b") > 0
        assert narrow.window_pair("a", "b") == 0
        assert narrow.num_windows == 6

    def test_relevant_filter_drops_other_terms(self):
        stats = CooccurrenceStats.from_documents(
            [["a", "pad", "b"]], window_size=110, relevant={"a", "b"}
        )
        assert "pad" not in stats.doc_freq
        assert stats.doc_pair("a", "b") == 1

    def test_window_size_validated(self):
        with pytest.raises(MetricsError):
            CooccurrenceStats.from_documents([["a"]], window_size=0)
