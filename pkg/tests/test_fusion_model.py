import math

import numpy as np
import pytest

from pvss.camera_graph import CameraGraph
from pvss.errors import (
    OutOfRangeScore,
    SingleClassData,
    UnknownCamera,
    UnreachablePair,
)
from pvss.fusion_model import (
    FusionParams,
    FusionTrainer,
    StPair,
    bce_loss,
    fuse,
    init_params,
    load_params,
    loss_and_grads,
    save_params,
    st_distance,
    st_similarity,
    visual_similarity,
)

from conftest import make_track


class TestVisualSimilarity:
    def test_lambda_one(self):
        assert visual_similarity(0.8, 0.1, 1.0) == 0.8

    def test_half_half(self):
        assert visual_similarity(0.6, 0.4, 0.5) == 0.5

    def test_neutral_fill(self):
        assert visual_similarity(0.6, None, 0.5) == pytest.approx(0.55, abs=1e-15)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeScore):
            visual_similarity(1.2, 0.5, 0.5)
        with pytest.raises(OutOfRangeScore):
            visual_similarity(0.5, -0.1, 0.5)

    def test_monotone_in_both_scores(self):
        lam = 0.3
        base = visual_similarity(0.4, 0.4, lam)
        assert visual_similarity(0.5, 0.4, lam) >= base
        assert visual_similarity(0.4, 0.5, lam) >= base


class TestStDistance:
    def test_same_camera_same_time(self, line_graph):
        q = make_track(0, 0, 100.0)
        g = make_track(0, 1, 100.0)
        assert st_distance(q, g, line_graph) == StPair(0.0, 0.0)

    def test_adjacent_cameras(self, line_graph):
        q = make_track(0, 0, 100.0)
        g = make_track(1, 0, 160.0)
        assert st_distance(q, g, line_graph) == StPair(500.0, 60.0)

    def test_two_hop_path(self, line_graph):
        q = make_track(0, 0, 0.0)
        g = make_track(2, 0, 10.0)
        assert st_distance(q, g, line_graph) == StPair(800.0, 10.0)

    def test_unknown_camera(self, line_graph):
        with pytest.raises(UnknownCamera):
            st_distance(make_track(0, 0, 0.0), make_track(9, 0, 0.0), line_graph)

    def test_unreachable(self):
        g = CameraGraph()
        g.add_node(0)
        g.add_node(1)  # no edges at all
        with pytest.raises(UnreachablePair):
            st_distance(make_track(0, 0, 0.0), make_track(1, 0, 0.0), g)

    def test_random_graph_vs_floyd_warshall(self):
        rng = np.random.default_rng(17)
        n = 12
        g = CameraGraph()
        for c in range(n):
            g.add_node(c)
        dist = np.full((n, n), np.inf)
        np.fill_diagonal(dist, 0.0)
        for _ in range(30):
            a, b = rng.integers(n, size=2)
            if a == b or (int(a), int(b)) in g.edges:
                continue
            w = float(rng.uniform(10, 500))
            g.add_edge(int(a), int(b), w)
            dist[a, b] = min(dist[a, b], w)
            dist[b, a] = min(dist[b, a], w)  # undirected closure
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    dist[i, j] = min(dist[i, j], dist[i, k] + dist[k, j])
        for i in range(n):
            for j in range(n):
                if math.isinf(dist[i, j]):
                    with pytest.raises(UnreachablePair):
                        st_distance(make_track(i, 0, 0.0), make_track(j, 0, 0.0), g)
                else:
                    pair = st_distance(make_track(i, 0, 0.0), make_track(j, 0, 0.0), g)
                    assert pair.d_s == pytest.approx(dist[i, j], rel=1e-12)


def zero_params(hidden=2):
    return FusionParams(
        lam=0.5,
        w1=np.zeros((hidden, 2)),
        b1=np.zeros(hidden),
        w2=np.zeros(hidden),
        b2=0.0,
        fuse_w=np.zeros(2),
        fuse_b=0.0,
    )


class TestForward:
    def test_zero_network_is_half(self):
        p = zero_params()
        for d_s, d_t in ((0.0, 0.0), (1e4, 3.0), (5.0, 9e5)):
            assert st_similarity(StPair(d_s, d_t), p) == 0.5

    def test_two_unit_hidden_hand_computed(self):
        p = zero_params(hidden=2)
        p.w1 = np.array([[1.0, -0.5], [0.25, 2.0]])
        p.b1 = np.array([0.1, -0.2])
        p.w2 = np.array([0.5, -1.5])
        p.b2 = 0.3
        d_s, d_t = 2.0, 1.0
        h1 = max(0.0, 1.0 * d_s + (-0.5) * d_t + 0.1)
        h2 = max(0.0, 0.25 * d_s + 2.0 * d_t - 0.2)
        a2 = 0.5 * h1 - 1.5 * h2 + 0.3
        expect = 1.0 / (1.0 + math.exp(-a2))
        assert st_similarity(StPair(d_s, d_t), p) == pytest.approx(expect, abs=1e-12)

    def test_output_stays_in_unit_interval(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            p = init_params(seed=int(rng.integers(1e6)))
            s = st_similarity(StPair(float(rng.uniform(0, 1e4)), float(rng.uniform(0, 1e5))), p)
            assert 0.0 <= s <= 1.0
            # away from saturation the output is strictly interior
            assert 0.0 < st_similarity(StPair(float(rng.uniform(0, 2)), float(rng.uniform(0, 2))), p) < 1.0

    def test_fuse_zero_head(self):
        p = zero_params()
        assert fuse(0.9, 0.1, p) == 0.5

    def test_fuse_scalar_sigmoid(self):
        p = zero_params()
        p.fuse_w = np.array([4.0, 0.0])
        p.fuse_b = -2.0
        for s_v in (0.0, 0.25, 0.5, 1.0):
            assert fuse(s_v, 0.7, p) == pytest.approx(1.0 / (1.0 + math.exp(-(4 * s_v - 2))), abs=1e-12)

    def test_fuse_monotone_when_weights_positive(self):
        p = zero_params()
        p.fuse_w = np.array([1.7, 0.8])
        prev = -1.0
        for s_v in np.linspace(0, 1, 20):
            cur = fuse(float(s_v), 0.4, p)
            assert cur >= prev
            prev = cur


def finite_difference_grads(params, d_s, d_t, s_v, y, eps=1e-6):
    """Central differences over every trainable coordinate."""
    grads = {}
    for name in ("w1", "b1", "w2", "b2", "fuse_w", "fuse_b"):
        val = getattr(params, name)
        if np.isscalar(val) or np.ndim(val) == 0:
            p_hi, p_lo = params.copy(), params.copy()
            setattr(p_hi, name, val + eps)
            setattr(p_lo, name, val - eps)
            grads[name] = (
                bce_loss(p_hi, d_s, d_t, s_v, y) - bce_loss(p_lo, d_s, d_t, s_v, y)
            ) / (2 * eps)
        else:
            g = np.zeros_like(val)
            it = np.nditer(val, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                p_hi, p_lo = params.copy(), params.copy()
                getattr(p_hi, name)[idx] += eps
                getattr(p_lo, name)[idx] -= eps
                g[idx] = (
                    bce_loss(p_hi, d_s, d_t, s_v, y) - bce_loss(p_lo, d_s, d_t, s_v, y)
                ) / (2 * eps)
            grads[name] = g
    return grads


def assert_grads_close(analytic, numeric, tol=1e-4):
    for name, a in analytic.items():
        n = numeric[name]
        a, n = np.asarray(a, dtype=float), np.asarray(n, dtype=float)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
        rel = np.abs(a - n) / denom
        assert np.max(rel) < tol, f"{name}: max rel err {np.max(rel)}"


class TestGradients:
    def test_analytic_matches_finite_differences(self):
        rng = np.random.default_rng(31)
        for draw in range(10):
            params = init_params(hidden=6, seed=100 + draw)
            params.norm_mean = rng.uniform(-1, 1, size=2)
            params.norm_scale = rng.uniform(0.5, 2.0, size=2)
            b = 8
            d_s = rng.uniform(0, 5, size=b)
            d_t = rng.uniform(0, 5, size=b)
            s_v = rng.uniform(0, 1, size=b)
            y = rng.integers(0, 2, size=b).astype(float)
            _, analytic = loss_and_grads(params, d_s, d_t, s_v, y)
            numeric = finite_difference_grads(params, d_s, d_t, s_v, y)
            assert_grads_close(analytic, numeric)


class TestTraining:
    def _separable(self, n=200, seed=3):
        rng = np.random.default_rng(seed)
        half = n // 2
        pos = np.column_stack(
            [rng.uniform(0, 300, half), rng.uniform(0, 120, half), rng.uniform(0.7, 1.0, half)]
        )
        neg = np.column_stack(
            [rng.uniform(2000, 5000, half), rng.uniform(3000, 9000, half), rng.uniform(0.0, 0.35, half)]
        )
        X = np.vstack([pos, neg])
        y = np.concatenate([np.ones(half), np.zeros(half)])
        return X, y

    def test_separable_training_accuracy(self):
        X, y = self._separable()
        trainer = FusionTrainer(epochs=100, seed=1).fit(X, y)
        acc = np.mean(trainer.predict(X) == y)
        assert acc >= 0.95

    def test_no_signal_floor_is_ln2(self):
        rng = np.random.default_rng(8)
        n = 400
        X = np.column_stack(
            [rng.uniform(0, 100, n), rng.uniform(0, 100, n), rng.uniform(0.4, 0.6, n)]
        )
        y = np.tile([0.0, 1.0], n // 2)  # labels independent of features
        trainer = FusionTrainer(epochs=60, lr=0.1, seed=2).fit(X, y)
        assert abs(trainer.final_loss_ - math.log(2)) < 0.05

    def test_single_class_rejected(self):
        X = np.ones((10, 3))
        with pytest.raises(SingleClassData):
            FusionTrainer().fit(X, np.ones(10))

    def test_loss_non_increasing_at_stable_lr(self):
        X, y = self._separable()
        trainer = FusionTrainer(epochs=40, lr=0.05, batch=200, seed=5).fit(X, y)
        curve = trainer.loss_curve_
        assert all(b <= a + 1e-9 for a, b in zip(curve, curve[1:]))

    def test_deterministic_given_seed(self):
        X, y = self._separable()
        a = FusionTrainer(epochs=10, seed=7).fit(X, y)
        b = FusionTrainer(epochs=10, seed=7).fit(X, y)
        assert np.array_equal(a.params_.w1, b.params_.w1)
        assert a.final_loss_ == b.final_loss_


class TestPersistence:
    def test_roundtrip_exact(self, tmp_path):
        params = init_params(seed=11)
        params.norm_mean = np.array([123.456, 7.89])
        params.norm_scale = np.array([3.21, 0.0625])
        path = tmp_path / "fusion.pvss"
        save_params(params, path)
        loaded = load_params(path)
        assert loaded.lam == params.lam
        for name in ("w1", "b1", "w2", "fuse_w", "norm_mean", "norm_scale"):
            assert np.array_equal(getattr(loaded, name), getattr(params, name))
        assert loaded.b2 == params.b2
        assert loaded.fuse_b == params.fuse_b
