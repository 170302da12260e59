import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tbert.clustering import KMeansConfig, kmeans
from tbert.embeddings import EmbeddingMatrix
from tbert.fusion import FusedMatrix, FusionConfig, FusionError, fuse, load_fused, save_fused


def simplex_rows(rng, n, k):
    raw = rng.random((n, k)) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


class TestConfig:
    def test_gamma_validated(self):
        with pytest.raises(FusionError):
            FusionConfig(gamma=-1.0)
        with pytest.raises(FusionError):
            FusionConfig(gamma=float("nan"))

    def test_gamma_zero_allowed(self):
        assert FusionConfig(gamma=0.0).gamma == 0.0


class TestFuse:
    def test_worked_example(self):
        omega = [[0.75, 0.25]]
        h = [[1.0, 2.0, 3.0]]
        fm = fuse(omega, h, FusionConfig(gamma=10.0, normalize=False))
        assert fm.data.tolist() == [[7.5, 2.5, 1.0, 2.0, 3.0]]
        assert fm.k == 2
        assert fm.d == 3

    def test_topic_rows_sum_to_gamma(self):
        rng = np.random.default_rng(0)
        omega = simplex_rows(rng, 40, 6)
        h = rng.normal(size=(40, 12))
        fm = fuse(omega, h, FusionConfig(gamma=15.0))
        assert np.abs(fm.topic_block.sum(axis=1) - 15.0).max() < 1e-6

    def test_normalize_scales_embedding_block(self):
        omega = [[1.0]]
        h = [[3.0, 4.0]]
        fm = fuse(omega, h, FusionConfig(gamma=2.0, normalize=True))
        assert np.allclose(fm.embedding_block, [[0.6, 0.8]])
        raw = fuse(omega, h, FusionConfig(gamma=2.0, normalize=False))
        assert np.allclose(raw.embedding_block, [[3.0, 4.0]])

    def test_embedding_matrix_carries_ids(self):
        m = EmbeddingMatrix(ids=["a", "b"], data=np.eye(2, dtype=np.float32))
        fm = fuse([[1.0], [1.0]], m, FusionConfig(gamma=1.0))
        assert fm.ids == ["a", "b"]

    def test_explicit_ids_override(self):
        m = EmbeddingMatrix(ids=["a", "b"], data=np.eye(2, dtype=np.float32))
        fm = fuse([[1.0], [1.0]], m, FusionConfig(gamma=1.0), ids=["x", "y"])
        assert fm.ids == ["x", "y"]

    def test_row_mismatch_rejected(self):
        with pytest.raises(FusionError, match="row counts differ"):
            fuse([[1.0]], [[1.0], [2.0]], FusionConfig())

    def test_non_finite_rejected(self):
        with pytest.raises(FusionError):
            fuse([[np.nan]], [[1.0]], FusionConfig(normalize=False))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_distance_decomposition(self, seed):
        """Euclidean distance in fused space splits into the two blocks:

        d_fused^2 = gamma^2 d(omega)^2 + d(H)^2 for normalize=False.
        """
        rng = np.random.default_rng(seed)
        k, d = int(rng.integers(2, 6)), int(rng.integers(2, 8))
        omega = simplex_rows(rng, 2, k)
        h = rng.normal(size=(2, d))
        gamma = float(rng.uniform(0.0, 20.0))
        fm = fuse(omega, h, FusionConfig(gamma=gamma, normalize=False))
        fused_sq = np.sum((fm.data[0] - fm.data[1]) ** 2)
        omega_sq = np.sum((omega[0] - omega[1]) ** 2)
        h_sq = np.sum((h[0] - h[1]) ** 2)
        assert fused_sq == pytest.approx(gamma**2 * omega_sq + h_sq, rel=1e-9)

    def test_gamma_zero_clusters_like_raw_embeddings(self):
        rng = np.random.default_rng(1)
        centers = np.array([[0.0] * 4, [8.0] * 4])
        h = np.vstack([centers[i % 2] + rng.normal(0, 0.3, 4) for i in range(30)])
        omega = simplex_rows(rng, 30, 3)
        fm = fuse(omega, h, FusionConfig(gamma=0.0, normalize=False))
        cfg = KMeansConfig(k=2, seed=0)
        from_fused = kmeans(fm.data, cfg).assignments
        from_raw = kmeans(h, cfg).assignments
        assert np.array_equal(from_fused, from_raw)


class TestFusedMatrix:
    def test_column_count_checked(self):
        with pytest.raises(FusionError, match="columns"):
            FusedMatrix(data=np.zeros((2, 4)), k=2, d=3, gamma=1.0)

    def test_topic_row_sums_checked(self):
        data = np.array([[0.5, 0.2, 1.0]])
        with pytest.raises(FusionError, match="sum to gamma"):
            FusedMatrix(data=data, k=2, d=1, gamma=1.0)

    def test_id_alignment_checked(self):
        data = np.array([[1.0, 0.5]])
        with pytest.raises(FusionError, match="ids"):
            FusedMatrix(data=data, k=1, d=1, gamma=1.0, ids=["a", "b"])

    def test_blocks(self):
        data = np.array([[0.25, 0.75, 9.0, 8.0]])
        fm = FusedMatrix(data=data, k=2, d=2, gamma=1.0)
        assert fm.topic_block.tolist() == [[0.25, 0.75]]
        assert fm.embedding_block.tolist() == [[9.0, 8.0]]


class TestSaveLoad:
    def test_round_trip_restores_gamma_sums(self, tmp_path):
        rng = np.random.default_rng(3)
        omega = simplex_rows(rng, 25, 5)
        h = rng.normal(size=(25, 9))
        fm = fuse(omega, h, FusionConfig(gamma=15.0), ids=[f"d{i}" for i in range(25)])
        path = tmp_path / "fused.tbem"
        save_fused(fm, path)
        back = load_fused(path)
        assert back.ids == fm.ids
        assert back.k == 5 and back.d == 9
        assert back.gamma == 15.0
        # float32 storage quantizes, but topic rows are rescaled on load
        assert np.abs(back.topic_block.sum(axis=1) - 15.0).max() < 1e-9
        assert np.allclose(back.data, fm.data, atol=1e-4)

    def test_round_trip_without_ids_numbers_rows(self, tmp_path):
        fm = fuse([[1.0]], [[2.0, 3.0]], FusionConfig(gamma=4.0, normalize=False))
        path = tmp_path / "fused.tbem"
        save_fused(fm, path)
        assert load_fused(path).ids == ["0"]

    def test_missing_sidecar_rejected(self, tmp_path):
        fm = fuse([[1.0]], [[2.0]], FusionConfig(gamma=1.0, normalize=False))
        path = tmp_path / "fused.tbem"
        save_fused(fm, path)
        (tmp_path / "fused.tbem.json").unlink()
        with pytest.raises(FusionError, match="sidecar"):
            load_fused(path)
