import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvss.errors import (
    DimensionMismatch,
    EmptyLevel,
    EmptySequence,
    LevelNotBuilt,
    ZeroVector,
)
from pvss.feature_index import (
    TrackFeature,
    TwoLevelIndex,
    VectorIndex,
    pool_track,
    similarity,
)


class TestPooling:
    def test_single_vector_identity(self):
        v = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(pool_track([v]), v)

    def test_two_one_hots(self):
        out = pool_track([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert np.array_equal(out, np.array([0.5, 0.5]))

    def test_random_vectors_vs_summation_oracle(self):
        rng = np.random.default_rng(1)
        vecs = [rng.standard_normal(2048) for _ in range(50)]
        acc = np.zeros(2048)
        for v in vecs:
            acc = acc + v
        expect = acc / 50
        assert np.max(np.abs(pool_track(vecs) - expect)) < 1e-12

    def test_empty(self):
        with pytest.raises(EmptySequence):
            pool_track([])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            pool_track([np.ones(3), np.ones(4)])


class TestSimilarity:
    def test_identical(self):
        v = np.array([0.3, -0.7, 2.0])
        assert similarity(v, v) == 1.0

    def test_orthogonal(self):
        assert similarity([1.0, 0.0], [0.0, 1.0]) == 0.5

    def test_opposite(self):
        v = np.array([1.0, 2.0])
        assert similarity(v, -v) == 0.0

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            similarity([0.0, 0.0], [1.0, 0.0])

    @given(exponent=st.integers(min_value=-20, max_value=20))
    @settings(max_examples=30, deadline=None)
    def test_scale_invariance_exact_for_binary_scales(self, exponent):
        a = np.array([0.5, -1.0, 2.0])
        b = np.array([1.0, 0.25, -0.5])
        assert similarity(2.0**exponent * a, b) == similarity(a, b)

    @given(sigma=st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=30, deadline=None)
    def test_scale_invariance(self, sigma):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal(8), rng.standard_normal(8)
        assert similarity(sigma * a, b) == pytest.approx(similarity(a, b), abs=1e-14)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal(16), rng.standard_normal(16)
        assert similarity(a, b) == similarity(b, a)


class TestVectorIndex:
    def test_single_vector(self):
        idx = VectorIndex().fit(np.array([[1.0, 0.0]]), [(0, 0)])
        rng = np.random.default_rng(0)
        for _ in range(5):
            got = idx.knn(rng.standard_normal(2), 1)
            assert got[0][0] == (0, 0)

    def test_one_hot_self_match(self):
        x = np.eye(100)
        ids = [(0, i) for i in range(100)]
        idx = VectorIndex().fit(x, ids)
        got = idx.knn(x[42], 1)
        assert got[0] == ((0, 42), 1.0)

    def test_empty_build(self):
        with pytest.raises(EmptyLevel):
            VectorIndex().fit(np.zeros((0, 4)), [])

    def test_not_built(self):
        with pytest.raises(LevelNotBuilt):
            VectorIndex().knn([1.0], 1)

    def test_k_saturation(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((7, 4))
        idx = VectorIndex().fit(x, [(0, i) for i in range(7)])
        got = idx.knn(rng.standard_normal(4), 100)
        assert len(got) == 7
        scores = [s for _, s in got]
        assert scores == sorted(scores, reverse=True)

    def test_filter_single_track(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((20, 8))
        ids = [(0, i) for i in range(20)]
        idx = VectorIndex().fit(x, ids)
        q = rng.standard_normal(8)
        got = idx.knn(q, 5, candidate_filter={(0, 13)})
        assert len(got) == 1
        assert got[0][0] == (0, 13)
        assert got[0][1] == pytest.approx(similarity(q, x[13]), abs=1e-12)

    def test_filtered_exact_vs_bruteforce(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((200, 16))
        ids = [(i % 5, i) for i in range(200)]
        idx = VectorIndex(mode="exact").fit(x, ids)
        by_id = dict(zip(ids, x))
        for _ in range(100):
            q = rng.standard_normal(16)
            flt = {ids[i] for i in rng.choice(200, size=rng.integers(1, 60), replace=False)}
            k = int(rng.integers(1, 12))
            expect = sorted(
                ((r, similarity(q, by_id[r])) for r in flt),
                key=lambda kv: (-kv[1], kv[0]),
            )[:k]
            got = idx.knn(q, k, candidate_filter=flt)
            assert [r for r, _ in got] == [r for r, _ in expect]
            np.testing.assert_allclose(
                [s for _, s in got], [s for _, s in expect], atol=1e-12
            )

    def test_rescaling_rows_preserves_ranking(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((50, 8))
        ids = [(0, i) for i in range(50)]
        scales = rng.uniform(0.1, 10.0, size=50)
        a = VectorIndex().fit(x, ids)
        b = VectorIndex().fit(x * scales[:, None], ids)
        q = rng.standard_normal(8)
        assert [r for r, _ in a.knn(q, 10)] == [r for r, _ in b.knn(q, 10)]

    def test_exact_mode_rerun_stability(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((300, 8))
        idx = VectorIndex().fit(x, [(0, i) for i in range(300)])
        q = rng.standard_normal(8)
        assert idx.knn(q, 20) == idx.knn(q, 20)

    def test_approx_mode_small_corpus(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((500, 16))
        ids = [(0, i) for i in range(500)]
        exact = VectorIndex(mode="exact").fit(x, ids)
        approx = VectorIndex(mode="approx", seed=1).fit(x, ids)
        hits = 0
        for _ in range(20):
            q = rng.standard_normal(16)
            e = {r for r, _ in exact.knn(q, 10)}
            a = {r for r, _ in approx.knn(q, 10)}
            hits += len(e & a)
        assert hits / 200 >= 0.95


class TestTwoLevelIndex:
    def _features(self, n=30, seed=5, plate_every=2):
        rng = np.random.default_rng(seed)
        feats = []
        for i in range(n):
            plate = rng.standard_normal(4) if i % plate_every == 0 else None
            feats.append(TrackFeature((i % 3, i), rng.standard_normal(8), plate))
        return feats

    def test_level2_excludes_plateless(self):
        feats = self._features()
        idx = TwoLevelIndex.from_features(feats)
        assert len(idx.level1) == 30
        assert len(idx.level2) == 15
        plateless = {f.track_ref for f in feats if f.plate is None}
        for ref in plateless:
            assert ref not in idx.level2

    def test_buffer_merges_into_results(self):
        feats = self._features(n=20)
        idx = TwoLevelIndex.from_features(feats)
        newbie = TrackFeature((9, 99), np.ones(8), None)
        idx.add(newbie)
        got = idx.knn("coarse", np.ones(8), 1)
        assert got[0] == ((9, 99), 1.0)

    def test_rebuild_threshold(self):
        feats = self._features(n=20)
        idx = TwoLevelIndex.from_features(feats)
        rng = np.random.default_rng(0)
        for i in range(3):
            idx.add(TrackFeature((8, i), rng.standard_normal(8), None))
        # 3 > 10% of 20 triggered a rebuild; buffer folded into the main index
        assert len(idx._buffer) == 0
        assert len(idx.level1) == 23

    def test_persistence_roundtrip(self, tmp_path):
        idx = TwoLevelIndex.from_features(self._features())
        path = tmp_path / "idx.pvss"
        idx.save(path)
        loaded = TwoLevelIndex.load(path)
        assert len(loaded) == len(idx)
        q = np.ones(8)
        assert loaded.knn("coarse", q, 5) == idx.knn("coarse", q, 5)
        assert loaded.knn("fine", np.ones(4), 3) == idx.knn("fine", np.ones(4), 3)
