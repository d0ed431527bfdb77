"""Two-level vector index over track features.

Level 1 indexes the coarse appearance vectors of every track; level 2
indexes the fine plate vectors of the tracks whose plate was recognized.
Similarity is cosine mapped affinely to [0, 1] so downstream convex
combinations stay in [0, 1].

The approximate structure is a forest of randomized projection trees with
best-first (smallest boundary margin first) candidate collection, re-ranked
exactly. An exact flat scan is always retained: it is the oracle, the
fallback, and the path taken for filtered queries, whose candidate sets are
small per-camera batches.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    DimensionMismatch,
    EmptyLevel,
    EmptySequence,
    FormatError,
    LevelNotBuilt,
)
from .track_store import UNAVAL
from .validation import check_nonzero, check_vector, fmt_vector, parse_vector


def pool_track(per_image_vectors):
    """Element-wise mean of per-image vectors (track-level average pooling)."""
    vecs = list(per_image_vectors)
    if not vecs:
        raise EmptySequence("cannot pool an empty vector sequence")
    first = check_vector(vecs[0])
    acc = np.zeros_like(first)
    for v in vecs:
        acc += check_vector(v, dim=first.shape[0])
    return acc / len(vecs)


def similarity(a, b):
    """(1 + cosine(a, b)) / 2, in [0, 1]."""
    a = check_nonzero(check_vector(a, name="a"), "a")
    b = check_nonzero(check_vector(b, dim=a.shape[0], name="b"), "b")
    # dot/sqrt(dot*dot) keeps cos exactly +-1 for (anti)parallel inputs
    cos = float(a @ b) / math.sqrt(float(a @ a) * float(b @ b))
    return (1.0 + min(1.0, max(-1.0, cos))) / 2.0


@dataclass
class TrackFeature:
    track_ref: tuple  # (camera_id, vehicle_id)
    appearance: np.ndarray
    plate: np.ndarray | None = None


class _RPForest:
    """Forest of randomized median-split projection trees over unit vectors."""

    def __init__(self, n_trees, leaf_size, rng):
        self.n_trees = n_trees
        self.leaf_size = leaf_size
        self.rng = rng
        self.trees = []  # each: list of nodes; node = (direction, threshold, l, r) or (None, idx_array)

    def fit(self, xn):
        dim = xn.shape[1]
        all_idx = np.arange(xn.shape[0])
        self.trees = []
        for _ in range(self.n_trees):
            nodes = []
            self._build(xn, all_idx, dim, nodes)
            self.trees.append(nodes)

    def _build(self, xn, idx, dim, nodes):
        node_id = len(nodes)
        nodes.append(None)  # reserve slot
        if idx.shape[0] <= self.leaf_size:
            nodes[node_id] = (None, idx)
            return node_id
        direction = self.rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        proj = xn[idx] @ direction
        threshold = float(np.median(proj))
        mask = proj <= threshold
        # degenerate split (many identical projections): halve arbitrarily
        if mask.all() or not mask.any():
            half = idx.shape[0] // 2
            left_idx, right_idx = idx[:half], idx[half:]
        else:
            left_idx, right_idx = idx[mask], idx[~mask]
        left = self._build(xn, left_idx, dim, nodes)
        right = self._build(xn, right_idx, dim, nodes)
        nodes[node_id] = (direction, threshold, left, right)
        return node_id

    def candidates(self, qn, search_k):
        """Collect >= search_k candidate row indices, nearest boundaries first."""
        counter = itertools.count()
        heap = [(0.0, next(counter), t, 0) for t in range(len(self.trees))]
        seen = set()
        while heap and len(seen) < search_k:
            prio, _, tree, node_id = heapq.heappop(heap)
            node = self.trees[tree][node_id]
            if node[0] is None:
                seen.update(node[1].tolist())
                continue
            direction, threshold, left, right = node
            margin = float(qn @ direction) - threshold
            near, far = (left, right) if margin <= 0 else (right, left)
            heapq.heappush(heap, (prio, next(counter), tree, near))
            heapq.heappush(heap, (max(prio, abs(margin)), next(counter), tree, far))
        return np.fromiter(seen, dtype=np.int64, count=len(seen))


class VectorIndex(BaseEstimator):
    """Cosine top-K index over one feature level.

    Parameters
    ----------
    mode : "exact" or "approx". Exact is a flat scan; approx routes
        unfiltered queries through the projection forest and re-ranks
        candidates exactly. Filtered queries are always scanned exactly
        over the filter subset.
    trees, leaf_size, search_k : forest shape and candidate budget.
        search_k=None picks max(50 * K, 40% of the corpus) per query; the
        generous default is sized for uniformly random vectors, the worst
        case for partition trees. Clustered real embeddings can run with a
        much smaller budget.
    seed : forest construction seed (determinism).
    """

    def __init__(self, mode="exact", trees=48, leaf_size=96, search_k=None, seed=0):
        self.mode = mode
        self.trees = trees
        self.leaf_size = leaf_size
        self.search_k = search_k
        self.seed = seed

    def fit(self, features, ids):
        """Index vectors; ids are hashable, unique, and define tie-break order."""
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] == 0:
            raise EmptyLevel("index build needs a non-empty 2-D feature matrix")
        if len(ids) != x.shape[0]:
            raise DimensionMismatch("ids and feature rows differ in length")
        order = sorted(range(len(ids)), key=lambda i: ids[i])
        self.ids_ = [ids[i] for i in order]
        self.x_ = x[order]
        norms = np.linalg.norm(self.x_, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero vectors cannot be indexed")
        self.xn_ = self.x_ / norms[:, None]
        self._pos = {ref: i for i, ref in enumerate(self.ids_)}
        self.forest_ = None
        if self.mode == "approx":
            self.forest_ = _RPForest(self.trees, self.leaf_size, np.random.default_rng(self.seed))
            self.forest_.fit(self.xn_)
        return self

    def __len__(self):
        return len(getattr(self, "ids_", ()))

    def __contains__(self, ref):
        return ref in getattr(self, "_pos", {})

    def _check_built(self):
        if not hasattr(self, "xn_"):
            raise LevelNotBuilt("index level not built")

    def knn(self, query, k, candidate_filter=None):
        """Top-k (id, similarity) pairs, similarity descending, ids ascending
        on ties; restricted to candidate_filter when given."""
        self._check_built()
        if k < 1:
            raise ValueError("k must be >= 1")
        q = check_nonzero(check_vector(query, dim=self.x_.shape[1], name="query"), "query")
        qn = q / np.linalg.norm(q)

        if candidate_filter is not None:
            rows = np.array(
                sorted(self._pos[r] for r in candidate_filter if r in self._pos),
                dtype=np.int64,
            )
            if rows.size == 0:
                return []
        elif self.mode == "approx":
            budget = self.search_k or max(50 * k, int(0.4 * len(self.ids_)))
            rows = np.sort(self.forest_.candidates(qn, budget))
        else:
            rows = None  # full scan

        if rows is None:
            sims = np.clip(self.xn_ @ qn, -1.0, 1.0)
            order = np.argsort(-sims, kind="stable")[:k]
            return [(self.ids_[i], (1.0 + float(sims[i])) / 2.0) for i in order]
        sims = np.clip(self.xn_[rows] @ qn, -1.0, 1.0)
        order = np.argsort(-sims, kind="stable")[:k]
        return [(self.ids_[rows[i]], (1.0 + float(sims[i])) / 2.0) for i in order]


class TwoLevelIndex:
    """Coarse (appearance) + fine (plate) indexes with an insertion buffer.

    New features buffer in an exact side index and are merged at query time;
    the main index is rebuilt when the buffer exceeds 10% of its size.
    """

    REBUILD_FRACTION = 0.10

    def __init__(self, mode="exact", trees=48, leaf_size=96, search_k=None, seed=0):
        self.params = dict(mode=mode, trees=trees, leaf_size=leaf_size, search_k=search_k, seed=seed)
        self._features: list[TrackFeature] = []
        self._buffer: list[TrackFeature] = []
        self.level1: VectorIndex | None = None
        self.level2: VectorIndex | None = None

    @classmethod
    def from_features(cls, features, **params):
        idx = cls(**params)
        idx._features = list(features)
        idx._rebuild()
        return idx

    @classmethod
    def from_store(cls, store, **params):
        feats = [
            TrackFeature(m.track_ref, m.appearance_feature, m.plate_feature)
            for m in store.all_tracks()
        ]
        return cls.from_features(feats, **params)

    def _rebuild(self):
        self._features.extend(self._buffer)
        self._buffer = []
        if not self._features:
            raise EmptyLevel("no features to index")
        self.level1 = VectorIndex(**self.params).fit(
            np.stack([f.appearance for f in self._features]),
            [f.track_ref for f in self._features],
        )
        self._plates_ = {f.track_ref: f.plate for f in self._features}
        plated = [f for f in self._features if f.plate is not None]
        if plated:
            self.level2 = VectorIndex(**self.params).fit(
                np.stack([f.plate for f in plated]),
                [f.track_ref for f in plated],
            )
        else:
            self.level2 = None

    def add(self, feature: TrackFeature):
        self._buffer.append(feature)
        if len(self._buffer) > self.REBUILD_FRACTION * max(1, len(self._features)):
            self._rebuild()

    def __len__(self):
        return len(self._features) + len(self._buffer)

    def _level(self, level):
        if level not in ("coarse", "fine"):
            raise ValueError(f"unknown level {level!r}")
        return self.level1 if level == "coarse" else self.level2

    def knn(self, level, query, k, candidate_filter=None):
        """Top-k over main index plus buffer, merged under one ordering."""
        idx = self._level(level)
        if idx is None:
            raise LevelNotBuilt(f"level {level!r} not built")
        merged = dict(idx.knn(query, k, candidate_filter))
        for f in self._buffer:
            vec = f.appearance if level == "coarse" else f.plate
            if vec is None:
                continue
            if candidate_filter is not None and f.track_ref not in candidate_filter:
                continue
            merged[f.track_ref] = similarity(query, vec)
        ranked = sorted(merged.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:k]

    def plate_vector(self, track_ref):
        for f in reversed(self._buffer):
            if f.track_ref == track_ref:
                return f.plate
        return self._plates_.get(track_ref)

    # -- persistence -----------------------------------------------------------

    def save(self, path):
        p = self.params
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                f"pvss-index v1 mode={p['mode']} trees={p['trees']} "
                f"leaf_size={p['leaf_size']} search_k={p['search_k']} seed={p['seed']}\n"
            )
            for f in self._features + self._buffer:
                plate = "" if f.plate is None else fmt_vector(f.plate)
                fh.write(
                    f"{f.track_ref[0]}\t{f.track_ref[1]}\t{fmt_vector(f.appearance)}\t{plate}\n"
                )

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if header[:2] != ["pvss-index", "v1"]:
                raise FormatError(f"bad index header in {path}")
            kv = dict(p.split("=", 1) for p in header[2:])
            params = dict(
                mode=kv["mode"],
                trees=int(kv["trees"]),
                leaf_size=int(kv["leaf_size"]),
                search_k=None if kv["search_k"] == "None" else int(kv["search_k"]),
                seed=int(kv["seed"]),
            )
            feats = []
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 4:
                    continue
                feats.append(
                    TrackFeature(
                        (int(parts[0]), int(parts[1])),
                        parse_vector(parts[2]),
                        parse_vector(parts[3]),
                    )
                )
        return cls.from_features(feats, **params)


def has_plate(meta):
    return meta.plate != UNAVAL and meta.plate_feature is not None
