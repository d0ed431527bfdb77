"""Similarity fusion: convex visual combination, spatiotemporal MLP, and a
learned sigmoid fusion head, trained jointly with binary cross-entropy.

Visual score: S_v = lambda * s_coarse + (1 - lambda) * s_fine, with a neutral
0.5 fine score when either side has no recognized plate.

Spatiotemporal score: a (2, 64) ReLU layer followed by a (64, 1) sigmoid
layer over z-scored (spatial distance, temporal distance). Distances in raw
meters/seconds would saturate the sigmoid, so normalization statistics are
fitted on the training pairs and stored with the parameters.

Final score: sigmoid over the learned affine combination of the visual and
spatiotemporal scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    DivergedLoss,
    FormatError,
    OutOfRangeScore,
    SingleClassData,
)
from .validation import fmt_float, fmt_vector, parse_vector

HIDDEN_UNITS = 64
NEUTRAL_FINE_SCORE = 0.5

_EPS = 1e-12


@dataclass(frozen=True)
class StPair:
    """Spatial (meters) and temporal (seconds) distance between two tracks."""

    d_s: float
    d_t: float


@dataclass
class FusionParams:
    lam: float
    w1: np.ndarray  # (H, 2)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H,)
    b2: float
    fuse_w: np.ndarray  # (2,) weights on [S_v, S_st]
    fuse_b: float
    norm_mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    norm_scale: np.ndarray = field(default_factory=lambda: np.ones(2))

    def copy(self):
        return replace(
            self,
            w1=self.w1.copy(),
            b1=self.b1.copy(),
            w2=self.w2.copy(),
            fuse_w=self.fuse_w.copy(),
            norm_mean=self.norm_mean.copy(),
            norm_scale=self.norm_scale.copy(),
        )


def init_params(hidden=HIDDEN_UNITS, lam=0.5, seed=42):
    """Glorot-uniform initialization, reproducible for a given seed."""
    rng = np.random.default_rng(seed)

    def glorot(shape, fan_in, fan_out):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    return FusionParams(
        lam=lam,
        w1=glorot((hidden, 2), 2, hidden),
        b1=np.zeros(hidden),
        w2=glorot((hidden,), hidden, 1),
        b2=0.0,
        fuse_w=glorot((2,), 2, 1),
        fuse_b=0.0,
    )


def _sigmoid(x):
    """Numerically stable logistic function."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def visual_similarity(s_c, s_f, lam):
    """lambda * s_c + (1 - lambda) * s_f; absent s_f falls back to 0.5."""
    if s_f is None:
        s_f = NEUTRAL_FINE_SCORE
    for name, v in (("s_c", s_c), ("s_f", s_f), ("lambda", lam)):
        if not 0.0 <= v <= 1.0:
            raise OutOfRangeScore(f"{name}={v} outside [0, 1]")
    return lam * s_c + (1.0 - lam) * s_f


def st_distance(query_meta, gallery_meta, graph) -> StPair:
    """Road distance between the two tracks' cameras and absolute time gap."""
    d_s = graph.road_distance(query_meta.camera_id, gallery_meta.camera_id)
    d_t = abs(query_meta.timestamp_s - gallery_meta.timestamp_s)
    return StPair(d_s, d_t)


def _forward(params, d_s, d_t, s_v):
    """Shared forward pass; all inputs broadcastable 1-D arrays."""
    st = np.stack([np.asarray(d_s, dtype=np.float64), np.asarray(d_t, dtype=np.float64)], axis=-1)
    z = (st - params.norm_mean) / params.norm_scale
    a1 = z @ params.w1.T + params.b1
    h = np.maximum(a1, 0.0)
    a2 = h @ params.w2 + params.b2
    s_st = _sigmoid(a2)
    a3 = params.fuse_w[0] * np.asarray(s_v, dtype=np.float64) + params.fuse_w[1] * s_st + params.fuse_b
    s = _sigmoid(a3)
    return z, a1, h, s_st, s


def st_similarity(pair: StPair, params: FusionParams):
    """Spatiotemporal similarity in (0, 1) for one distance pair."""
    _, _, _, s_st, _ = _forward(params, [pair.d_s], [pair.d_t], [0.0])
    return float(s_st[0])


def st_similarity_batch(d_s, d_t, params):
    _, _, _, s_st, _ = _forward(params, d_s, d_t, np.zeros(len(np.atleast_1d(d_s))))
    return s_st


def fuse(s_v, s_st, params: FusionParams):
    """Final similarity: sigmoid(fuse_w . [S_v, S_st] + fuse_b)."""
    a3 = params.fuse_w[0] * np.asarray(s_v, dtype=np.float64) + params.fuse_w[1] * np.asarray(
        s_st, dtype=np.float64
    ) + params.fuse_b
    out = _sigmoid(a3)
    return float(out[0]) if np.ndim(s_v) == 0 else out


def score(params, d_s, d_t, s_v):
    """Full fused score for arrays of (d_s, d_t, S_v)."""
    return _forward(params, d_s, d_t, s_v)[4]


def bce_loss(params, d_s, d_t, s_v, y):
    """Mean binary cross-entropy of the fused score against labels."""
    s = np.clip(score(params, d_s, d_t, s_v), _EPS, 1.0 - _EPS)
    y = np.asarray(y, dtype=np.float64)
    return float(-np.mean(y * np.log(s) + (1.0 - y) * np.log(1.0 - s)))


def loss_and_grads(params, d_s, d_t, s_v, y):
    """Loss plus analytic gradients for every trainable parameter."""
    y = np.asarray(y, dtype=np.float64)
    s_v = np.asarray(s_v, dtype=np.float64)
    z, a1, h, s_st, s = _forward(params, d_s, d_t, s_v)
    n = y.shape[0]
    s_c = np.clip(s, _EPS, 1.0 - _EPS)
    loss = float(-np.mean(y * np.log(s_c) + (1.0 - y) * np.log(1.0 - s_c)))

    # d loss / d a3; sigmoid + BCE collapse to (s - y) / n
    g = (s - y) / n
    grads = {
        "fuse_w": np.array([float(g @ s_v), float(g @ s_st)]),
        "fuse_b": float(np.sum(g)),
    }
    d_sst = g * params.fuse_w[1]
    d_a2 = d_sst * s_st * (1.0 - s_st)
    grads["w2"] = h.T @ d_a2
    grads["b2"] = float(np.sum(d_a2))
    d_h = np.outer(d_a2, params.w2)
    d_a1 = d_h * (a1 > 0)
    grads["w1"] = d_a1.T @ z
    grads["b1"] = d_a1.sum(axis=0)
    return loss, grads


class FusionTrainer(BaseEstimator):
    """Mini-batch gradient-descent trainer for the fusion network.

    fit(X, y) takes X with columns (d_s, d_t, S_v) and binary labels y.
    Deterministic for a fixed seed. Exposes params_ and loss_curve_.
    """

    def __init__(self, lam=0.5, hidden=HIDDEN_UNITS, lr=0.5, epochs=200, batch=64, seed=42):
        self.lam = lam
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.batch = batch
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != 3:
            raise ValueError("X must have columns (d_s, d_t, s_v)")
        classes = set(np.unique(y).tolist())
        if not classes == {0.0, 1.0}:
            raise SingleClassData(f"need both labels 0 and 1, got {sorted(classes)}")

        params = init_params(self.hidden, self.lam, self.seed)
        params.norm_mean = X[:, :2].mean(axis=0)
        params.norm_scale = np.maximum(X[:, :2].std(axis=0), 1e-9)

        rng = np.random.default_rng(self.seed)
        n = X.shape[0]
        self.loss_curve_ = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch):
                sel = order[start : start + self.batch]
                _, grads = loss_and_grads(
                    params, X[sel, 0], X[sel, 1], X[sel, 2], y[sel]
                )
                params.w1 -= self.lr * grads["w1"]
                params.b1 -= self.lr * grads["b1"]
                params.w2 -= self.lr * grads["w2"]
                params.b2 -= self.lr * grads["b2"]
                params.fuse_w -= self.lr * grads["fuse_w"]
                params.fuse_b -= self.lr * grads["fuse_b"]
            epoch_loss = bce_loss(params, X[:, 0], X[:, 1], X[:, 2], y)
            if not math.isfinite(epoch_loss):
                raise DivergedLoss(f"loss became {epoch_loss}")
            self.loss_curve_.append(epoch_loss)
        self.params_ = params
        self.final_loss_ = self.loss_curve_[-1]
        return self

    def predict_proba(self, X):
        X = np.asarray(X, dtype=np.float64)
        return score(self.params_, X[:, 0], X[:, 1], X[:, 2])

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)


# -- persistence ----------------------------------------------------------------


def save_params(params: FusionParams, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"pvss-fusion v1 hidden={params.w1.shape[0]}\n")
        fh.write(f"lam {fmt_float(params.lam)}\n")
        fh.write(f"norm_mean {fmt_vector(params.norm_mean)}\n")
        fh.write(f"norm_scale {fmt_vector(params.norm_scale)}\n")
        fh.write(f"w1 {fmt_vector(params.w1.ravel())}\n")
        fh.write(f"b1 {fmt_vector(params.b1)}\n")
        fh.write(f"w2 {fmt_vector(params.w2)}\n")
        fh.write(f"b2 {fmt_float(params.b2)}\n")
        fh.write(f"fuse_w {fmt_vector(params.fuse_w)}\n")
        fh.write(f"fuse_b {fmt_float(params.fuse_b)}\n")


def load_params(path) -> FusionParams:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:2] != ["pvss-fusion", "v1"]:
            raise FormatError(f"bad fusion params header in {path}")
        hidden = int(header[2].split("=", 1)[1])
        fields = {}
        for line in fh:
            name, _, value = line.rstrip("\n").partition(" ")
            fields[name] = value
    return FusionParams(
        lam=float(fields["lam"]),
        w1=parse_vector(fields["w1"]).reshape(hidden, 2),
        b1=parse_vector(fields["b1"]),
        w2=parse_vector(fields["w2"]),
        b2=float(fields["b2"]),
        fuse_w=parse_vector(fields["fuse_w"]),
        fuse_b=float(fields["fuse_b"]),
        norm_mean=parse_vector(fields["norm_mean"]),
        norm_scale=parse_vector(fields["norm_scale"]),
    )
