"""Wiring between stages: fusion training-pair construction and defaults."""

from __future__ import annotations

import numpy as np

from .errors import SingleClassData
from .feature_index import has_plate, similarity
from .fusion_model import (
    FusionParams,
    FusionTrainer,
    visual_similarity,
)


def visual_only_params(lam=0.5, gain=8.0):
    """Parameters whose fused score is a monotone map of S_v alone.

    Useful as a neutral baseline before any training has happened: the
    spatiotemporal branch is zeroed out (constant 0.5) and the fusion head
    passes S_v through a steep sigmoid centered at 0.5.
    """
    hidden = 64
    return FusionParams(
        lam=lam,
        w1=np.zeros((hidden, 2)),
        b1=np.zeros(hidden),
        w2=np.zeros(hidden),
        b2=0.0,
        fuse_w=np.array([gain, 0.0]),
        fuse_b=-gain / 2.0,
    )


def build_training_pairs(store, graph, identity_of, lam=0.5, neg_ratio=3,
                         max_pos_per_identity=30, seed=42):
    """Labeled (d_s, d_t, S_v, y) rows for fusion training.

    Positives: cross-camera track pairs of the same identity. Negatives:
    uniformly sampled cross-camera pairs of different identities, neg_ratio
    per positive. Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    tracks = store.all_tracks()
    by_identity = {}
    for m in tracks:
        by_identity.setdefault(identity_of[m.track_ref], []).append(m)

    dist_from = {c: graph.shortest_distances(c) for c in graph.nodes}

    def row(a, b):
        s_c = similarity(a.appearance_feature, b.appearance_feature)
        s_f = (
            similarity(a.plate_feature, b.plate_feature)
            if has_plate(a) and has_plate(b)
            else None
        )
        s_v = visual_similarity(s_c, s_f, lam)
        d_s = dist_from[a.camera_id].get(b.camera_id, 0.0)
        d_t = abs(a.timestamp_s - b.timestamp_s)
        return (d_s, d_t, s_v)

    pos_rows = []
    for identity in sorted(by_identity):
        group = by_identity[identity]
        pairs = [
            (a, b)
            for i, a in enumerate(group)
            for b in group[i + 1 :]
            if a.camera_id != b.camera_id
        ]
        if len(pairs) > max_pos_per_identity:
            sel = rng.choice(len(pairs), size=max_pos_per_identity, replace=False)
            pairs = [pairs[i] for i in sorted(sel)]
        pos_rows.extend(row(a, b) for a, b in pairs)

    if not pos_rows:
        raise SingleClassData("no cross-camera positive pairs available")

    neg_rows = []
    n_neg = neg_ratio * len(pos_rows)
    tries = 0
    while len(neg_rows) < n_neg and tries < 50 * n_neg:
        tries += 1
        a = tracks[int(rng.integers(len(tracks)))]
        b = tracks[int(rng.integers(len(tracks)))]
        if a.camera_id == b.camera_id:
            continue
        if identity_of[a.track_ref] == identity_of[b.track_ref]:
            continue
        neg_rows.append(row(a, b))
    if not neg_rows:
        raise SingleClassData("no cross-camera negative pairs available")

    X = np.array(pos_rows + neg_rows, dtype=np.float64)
    y = np.concatenate([np.ones(len(pos_rows)), np.zeros(len(neg_rows))])
    return X, y


def train_fusion(store, graph, identity_of, lam=0.5, lr=0.5, epochs=80,
                 batch=64, seed=42):
    """Train fusion parameters on pairs constructed from a labeled store."""
    X, y = build_training_pairs(store, graph, identity_of, lam=lam, seed=seed)
    trainer = FusionTrainer(lam=lam, lr=lr, epochs=epochs, batch=batch, seed=seed)
    trainer.fit(X, y)
    return trainer.params_, trainer.final_loss_
