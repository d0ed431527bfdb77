"""Progressive online search.

The spatial scope is expanded breadth-first over the camera graph so that
near cameras are scanned before distant ones. Within each layer, matching is
coarse-to-fine: a level-1 appearance shortlist (stage_ratio * K per layer)
receives plate scoring and full fusion. A constant-length ranked list is
maintained throughout; after each layer a progress snapshot is emitted, so
the search has useful results at any time.

With shortlist_all=True every in-scope candidate is fully scored; that mode
is the deterministic reference the layered behaviour is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyScope, IndexNotBuilt, UnknownTrack
from .feature_index import has_plate, similarity
from .fusion_model import fuse, st_similarity_batch, visual_similarity
from .validation import fmt_float

DEFAULT_K = 50
DEFAULT_STAGE_RATIO = 5


@dataclass(frozen=True)
class QueryTriplet:
    """Search input: query features, time range, spatial scope."""

    appearance: np.ndarray
    plate: np.ndarray | None
    t_start: float
    t_end: float
    start_camera: int
    max_hops: int | None = None
    camera_set: frozenset | None = None  # optional explicit scope restriction
    query_time_s: float | None = None  # defaults to the time-range midpoint

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValueError("t_start must be <= t_end")

    @property
    def anchor_time(self):
        if self.query_time_s is not None:
            return self.query_time_s
        return (self.t_start + self.t_end) / 2.0


@dataclass(frozen=True)
class RankedEntry:
    track_ref: tuple
    camera_id: int
    timestamp_s: float
    score: float
    layer: int


@dataclass
class SearchProgress:
    """Snapshot after finishing one BFS layer."""

    layer: int
    cameras_scanned: int
    candidates_evaluated: int
    entries: list  # RankedEntry, score descending


@dataclass
class SearchResult:
    entries: list
    snapshots: list


class ProgressiveSearcher:
    """Binds store, index, graph and fusion parameters into a search job."""

    def __init__(self, store, index, graph, params,
                 stage_ratio=DEFAULT_STAGE_RATIO, shortlist_all=False, early_stop=False):
        if index is None or index.level1 is None:
            raise IndexNotBuilt("level-1 index must be built before searching")
        self.store = store
        self.index = index
        self.graph = graph
        self.params = params
        self.stage_ratio = stage_ratio
        self.shortlist_all = shortlist_all
        self.early_stop = early_stop

    # -- scope ------------------------------------------------------------------

    def _layers(self, query: QueryTriplet):
        layers = self.graph.bfs_layers(query.start_camera, query.max_hops)
        if query.camera_set is not None:
            layers = [[c for c in layer if c in query.camera_set] for layer in layers]
            layers = [layer for layer in layers if layer]
        if not layers:
            raise EmptyScope("query scope contains no cameras")
        return layers

    # -- search -----------------------------------------------------------------

    def search(self, query: QueryTriplet, k=DEFAULT_K) -> SearchResult:
        layers = self._layers(query)
        dist = self.graph.shortest_distances(query.start_camera)
        best: dict[tuple, RankedEntry] = {}
        snapshots = []
        cameras_scanned = 0
        evaluated = 0

        for layer_idx, cameras in enumerate(layers):
            metas = []
            for cam in cameras:
                metas.extend(self.store.scan(cam, query.t_start, query.t_end))
                cameras_scanned += 1
            updated = False
            if metas:
                refs = {m.track_ref for m in metas}
                by_ref = {m.track_ref: m for m in metas}
                shortlist_k = len(refs) if self.shortlist_all else max(k, self.stage_ratio * k)
                coarse = self.index.knn("coarse", query.appearance, shortlist_k, candidate_filter=refs)
                evaluated += len(coarse)

                d_s = np.array([dist[by_ref[r].camera_id] for r, _ in coarse])
                d_t = np.array(
                    [abs(query.anchor_time - by_ref[r].timestamp_s) for r, _ in coarse]
                )
                s_v = np.array(
                    [
                        visual_similarity(
                            s_c,
                            similarity(query.plate, by_ref[r].plate_feature)
                            if query.plate is not None and has_plate(by_ref[r])
                            else None,
                            self.params.lam,
                        )
                        for r, s_c in coarse
                    ]
                )
                s_st = st_similarity_batch(d_s, d_t, self.params)
                scores = fuse(s_v, s_st, self.params)
                for (ref, _), s in zip(coarse, scores):
                    meta = by_ref[ref]
                    best[ref] = RankedEntry(ref, meta.camera_id, meta.timestamp_s, float(s), layer_idx)
                    updated = True
            entries = sorted(best.values(), key=lambda e: (-e.score, e.track_ref))[:k]
            snapshots.append(
                SearchProgress(layer_idx, cameras_scanned, evaluated, list(entries))
            )
            best = {e.track_ref: e for e in entries}
            if self.early_stop and not updated and len(entries) == k:
                break
        return SearchResult(snapshots[-1].entries, snapshots)

    # -- pivot ------------------------------------------------------------------

    def pivot(self, track_ref, window_s, max_hops=None) -> QueryTriplet:
        """Follow-on query anchored at a previous result's track."""
        try:
            meta = self.store.get(*track_ref)
        except UnknownTrack:
            raise
        t = meta.timestamp_s
        t_start, t_end = (t, t + window_s) if window_s >= 0 else (t + window_s, t)
        return QueryTriplet(
            appearance=meta.appearance_feature,
            plate=meta.plate_feature,
            t_start=t_start,
            t_end=t_end,
            start_camera=meta.camera_id,
            max_hops=max_hops,
            query_time_s=t,
        )


# -- snapshot wire format -------------------------------------------------------


def format_entry(e: RankedEntry):
    return (
        f"({e.track_ref[0]}:{e.track_ref[1]},{e.camera_id},"
        f"{fmt_float(e.timestamp_s)},{fmt_float(e.score)})"
    )


def format_snapshot(p: SearchProgress):
    body = "".join(format_entry(e) for e in p.entries)
    return f"layer={p.layer} scanned={p.cameras_scanned} list=[{body}]"


def format_final(entries):
    body = "".join(format_entry(e) for e in entries)
    return f"final list=[{body}]"
