"""Cross-camera track-to-track evaluation: AP, mAP, HIT@1, HIT@5.

Protocol: one query track per (identity, camera) pair; for each query,
gallery tracks from the query's own camera are removed before ranking and
before counting ground truths. AP is computed over the returned list of
length n; ground truths ranked below the cut contribute nothing to the
numerator but stay in the denominator.

Three method variants are reported: appearance only, appearance + plate,
and the full fusion with spatiotemporal similarity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyQuerySet, NoGroundTruth
from .feature_index import has_plate
from .fusion_model import fuse, st_similarity_batch

VARIANTS = ("App", "App+Plate", "Full")


def average_precision(ranked_refs, relevant, n_gt):
    """AP over a returned list: sum of precision-at-hit, divided by n_gt."""
    if n_gt < 1:
        raise NoGroundTruth("query has no ground truths")
    hits = 0
    total = 0.0
    for k, ref in enumerate(ranked_refs, start=1):
        if ref in relevant:
            hits += 1
            total += hits / k
    return total / n_gt


def mean_ap(aps):
    aps = list(aps)
    if not aps:
        raise EmptyQuerySet("mAP over zero queries")
    return sum(aps) / len(aps)


def hit_at(ranked_refs, relevant, k):
    """1 iff any relevant ref appears in the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return int(any(ref in relevant for ref in ranked_refs[:k]))


@dataclass
class VariantMetrics:
    variant: str
    mAP: float
    hit1: float
    hit5: float
    n_queries: int


@dataclass
class Report:
    variants: list = field(default_factory=list)

    def by_name(self, name) -> VariantMetrics:
        for v in self.variants:
            if v.variant == name:
                return v
        raise KeyError(name)

    def as_text(self):
        lines = [f"{'method':<12} {'mAP':>8} {'HIT@1':>8} {'HIT@5':>8} {'queries':>8}"]
        for v in self.variants:
            lines.append(
                f"{v.variant:<12} {v.mAP:>8.4f} {v.hit1:>8.4f} {v.hit5:>8.4f} {v.n_queries:>8d}"
            )
        return "\n".join(lines)

    def as_records(self):
        """Line-delimited machine-readable records for regression tracking."""
        return "\n".join(
            json.dumps(
                {
                    "variant": v.variant,
                    "mAP": v.mAP,
                    "hit1": v.hit1,
                    "hit5": v.hit5,
                    "n_queries": v.n_queries,
                },
                sort_keys=True,
            )
            for v in self.variants
        )


def select_queries(store, identity_of):
    """One query track per (identity, camera): the earliest such track."""
    chosen = {}
    for meta in store.all_tracks():
        identity = identity_of[meta.track_ref]
        key = (identity, meta.camera_id)
        if key not in chosen or meta.timestamp_s < chosen[key].timestamp_s:
            chosen[key] = meta
    return [chosen[k] for k in sorted(chosen)]


def run_protocol(store, graph, params, identity_of, k=None):
    """Metrics for the three variants on identical query/gallery splits.

    k limits the ranked list length (searcher K); None ranks the whole
    gallery. Same-camera gallery tracks are excluded per query.
    """
    gallery = store.all_tracks()
    queries = select_queries(store, identity_of)
    if not queries:
        raise EmptyQuerySet("no queries selectable")

    app = np.stack([m.appearance_feature for m in gallery])
    app = app / np.linalg.norm(app, axis=1)[:, None]
    cams = np.array([m.camera_id for m in gallery])
    times = np.array([m.timestamp_s for m in gallery])
    refs = [m.track_ref for m in gallery]
    identities = np.array([identity_of[r] for r in refs])

    plate_mask = np.array([has_plate(m) for m in gallery])
    d_p = next((m.plate_feature.shape[0] for m in gallery if has_plate(m)), 1)
    plate_mat = np.zeros((len(gallery), d_p))
    for i, m in enumerate(gallery):
        if plate_mask[i]:
            plate_mat[i] = m.plate_feature / np.linalg.norm(m.plate_feature)

    # road distances between camera pairs, reused across queries
    dist_from = {c: graph.shortest_distances(c) for c in graph.nodes}
    cam_dist = {
        c: np.array([dist_from[c].get(int(g), np.inf) for g in cams]) for c in graph.nodes
    }

    per_variant = {v: {"ap": [], "h1": [], "h5": []} for v in VARIANTS}
    for q in queries:
        keep = np.where(cams != q.camera_id)[0]
        if keep.size == 0:
            continue
        rel = identities[keep] == identity_of[q.track_ref]
        n_gt = int(rel.sum())
        if n_gt == 0:
            continue

        qa = q.appearance_feature / np.linalg.norm(q.appearance_feature)
        s_c = (1.0 + app[keep] @ qa) / 2.0

        s_f = np.full(keep.size, 0.5)
        if has_plate(q):
            qp = q.plate_feature / np.linalg.norm(q.plate_feature)
            both = plate_mask[keep]
            s_f[both] = (1.0 + plate_mat[keep][both] @ qp) / 2.0
        s_v = params.lam * s_c + (1.0 - params.lam) * s_f

        d_s = cam_dist[q.camera_id][keep]
        d_t = np.abs(times[keep] - q.timestamp_s)
        s_st = st_similarity_batch(d_s, d_t, params)
        s_full = fuse(s_v, s_st, params)

        for variant, scores in (("App", s_c), ("App+Plate", s_v), ("Full", s_full)):
            order = np.argsort(-scores, kind="stable")
            if k is not None:
                order = order[:k]
            rel_ranked = rel[order]
            hits = np.cumsum(rel_ranked)
            pos = np.nonzero(rel_ranked)[0]
            ap = float(np.sum(hits[pos] / (pos + 1))) / n_gt
            bucket = per_variant[variant]
            bucket["ap"].append(ap)
            bucket["h1"].append(int(rel_ranked[:1].any()))
            bucket["h5"].append(int(rel_ranked[:5].any()))

    report = Report()
    for variant in VARIANTS:
        bucket = per_variant[variant]
        report.variants.append(
            VariantMetrics(
                variant,
                mean_ap(bucket["ap"]),
                float(np.mean(bucket["h1"])),
                float(np.mean(bucket["h5"])),
                len(bucket["ap"]),
            )
        )
    return report
