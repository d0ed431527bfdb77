"""HTTP service over a data directory: ingest, index, progressive search.

/search streams one text record per BFS layer followed by a terminal record
with the final list, over a persistent chunked response. The same search
code path backs the CLI, so both surfaces return identical results for
identical state.
"""

from __future__ import annotations

import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from . import errors
from .camera_graph import CameraGraph
from .config import (
    FUSION_FILE,
    GRAPH_FILE,
    GT_FILE,
    INDEX_FILE,
    REPORT_RECORDS,
    REPORT_TEXT,
    STORE_FILE,
    ServiceConfig,
)
from .evaluator import run_protocol
from .feature_index import TrackFeature, TwoLevelIndex
from .fusion_model import load_params
from .pipeline import visual_only_params
from .searcher import (
    ProgressiveSearcher,
    QueryTriplet,
    format_final,
    format_snapshot,
)
from .synth_world import load_ground_truth
from .track_store import TrackMetadata, TrackStore


class AppState:
    """Artifacts loaded from the data directory plus swap coordination."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store: TrackStore | None = None
        self.graph: CameraGraph | None = None
        self.index: TwoLevelIndex | None = None
        self.params = None
        self.rebuilding = False
        self._lock = threading.Lock()
        self._load()

    def _load(self):
        cfg = self.config
        if cfg.path(STORE_FILE).exists():
            self.store = TrackStore.load(cfg.path(STORE_FILE))
        if cfg.path(GRAPH_FILE).exists():
            self.graph = CameraGraph.load(cfg.path(GRAPH_FILE))
        if cfg.path(INDEX_FILE).exists():
            self.index = TwoLevelIndex.load(cfg.path(INDEX_FILE))
        if cfg.path(FUSION_FILE).exists():
            self.params = load_params(cfg.path(FUSION_FILE))
        else:
            self.params = visual_only_params(lam=cfg.fusion.get("lambda", 0.5))

    def searcher(self) -> ProgressiveSearcher:
        if self.index is None:
            raise errors.IndexNotBuilt("run index build first")
        s = self.config.search
        return ProgressiveSearcher(
            self.store,
            self.index,
            self.graph,
            self.params,
            stage_ratio=int(s.get("stage_ratio", 5)),
            shortlist_all=bool(s.get("shortlist_all", False)),
            early_stop=bool(s.get("early_stop", False)),
        )

    def rebuild_index(self):
        # copy-and-swap: queries during the build see the old value; the
        # swap itself is guarded so streams never observe a half-built index
        new_index = TwoLevelIndex.from_store(self.store, **self.config.index_params())
        with self._lock:
            self.rebuilding = True
            try:
                self.index = new_index
                new_index.save(self.config.path(INDEX_FILE))
            finally:
                self.rebuilding = False
        return len(new_index)


class SearchBody(BaseModel):
    appearance: list[float] | None = None
    plate: list[float] | None = None
    track: tuple[int, int] | None = None  # alternative to raw features
    t_start: float
    t_end: float
    start_camera: int
    max_hops: int | None = None
    query_time_s: float | None = None
    k: int | None = None


class PivotBody(BaseModel):
    track: tuple[int, int]
    window_s: float
    max_hops: int | None = None


class IngestBody(BaseModel):
    camera_id: int
    vehicle_id: int
    frame_id: int
    track_length: int
    trajectory: list[tuple[float, float]]
    appearance_feature: list[float]
    plate_feature: list[float] | None = None
    duration_s: float
    timestamp_s: float
    plate: str = "UNAVAL"


def _triplet_from_body(state: AppState, body: SearchBody) -> QueryTriplet:
    if body.track is not None:
        meta = state.store.get(*body.track)
        appearance = meta.appearance_feature
        plate = meta.plate_feature
        query_time = meta.timestamp_s if body.query_time_s is None else body.query_time_s
    else:
        if body.appearance is None:
            raise ValueError("either 'appearance' or 'track' is required")
        appearance = np.asarray(body.appearance, dtype=np.float64)
        plate = None if body.plate is None else np.asarray(body.plate, dtype=np.float64)
        query_time = body.query_time_s
    return QueryTriplet(
        appearance=appearance,
        plate=plate,
        t_start=body.t_start,
        t_end=body.t_end,
        start_camera=body.start_camera,
        max_hops=body.max_hops,
        query_time_s=query_time,
    )


def triplet_to_doc(t: QueryTriplet):
    return {
        "appearance": [float(x) for x in t.appearance],
        "plate": None if t.plate is None else [float(x) for x in t.plate],
        "t_start": t.t_start,
        "t_end": t.t_end,
        "start_camera": t.start_camera,
        "max_hops": t.max_hops,
        "query_time_s": t.query_time_s,
    }


_NOT_FOUND = (errors.UnknownCamera, errors.UnknownTrack, errors.UnknownEdge)
_CONFLICT = (errors.IndexNotBuilt, errors.LevelNotBuilt)


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="pvss", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc):
        return JSONResponse({"error": "malformed request", "detail": str(exc)}, status_code=400)

    @app.exception_handler(errors.PvssError)
    async def domain_error(request: Request, exc):
        if isinstance(exc, _NOT_FOUND):
            code = 404
        elif isinstance(exc, _CONFLICT):
            code = 409
        else:
            code = 400
        return JSONResponse(
            {"error": type(exc).__name__, "detail": str(exc)}, status_code=code
        )

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc):
        return JSONResponse({"error": "ValueError", "detail": str(exc)}, status_code=400)

    @app.get("/cameras")
    def cameras():
        return [
            {
                "camera_id": n.camera_id,
                "gps": list(n.gps),
                "settings": n.settings,
            }
            for n in sorted(state.graph.nodes.values(), key=lambda n: n.camera_id)
        ]

    @app.get("/graph")
    def graph():
        return {
            "slot_length_s": state.graph.slot_length_s,
            "nodes": [
                {"camera_id": n.camera_id, "gps": list(n.gps)}
                for n in sorted(state.graph.nodes.values(), key=lambda n: n.camera_id)
            ],
            "edges": [
                {
                    "from": e.from_camera,
                    "to": e.to_camera,
                    "distance_m": e.spatial_distance_m,
                }
                for e in (state.graph.edges[k] for k in sorted(state.graph.edges))
            ],
        }

    @app.post("/ingest")
    def ingest(body: IngestBody):
        meta = TrackMetadata(
            camera_id=body.camera_id,
            vehicle_id=body.vehicle_id,
            frame_id=body.frame_id,
            track_length=body.track_length,
            trajectory=[tuple(p) for p in body.trajectory],
            appearance_feature=np.asarray(body.appearance_feature, dtype=np.float64),
            plate_feature=None
            if body.plate_feature is None
            else np.asarray(body.plate_feature, dtype=np.float64),
            duration_s=body.duration_s,
            timestamp_s=body.timestamp_s,
            plate=body.plate,
        )
        ref = state.store.ingest_track(meta)
        if state.index is not None:
            state.index.add(TrackFeature(ref, meta.appearance_feature, meta.plate_feature))
        return {"track_ref": list(ref)}

    @app.post("/index/build")
    def index_build():
        n = state.rebuild_index()
        return {"indexed": n}

    @app.post("/search")
    def search(body: SearchBody):
        if state.rebuilding:
            return JSONResponse({"error": "index rebuild in progress"}, status_code=503)
        triplet = _triplet_from_body(state, body)
        k = body.k or state.config.k_default
        searcher = state.searcher()
        result = searcher.search(triplet, k)  # computed eagerly: errors -> HTTP codes

        def stream():
            for snap in result.snapshots:
                yield format_snapshot(snap) + "\n"
            yield format_final(result.entries) + "\n"

        return StreamingResponse(stream(), media_type="text/plain")

    @app.post("/pivot")
    def pivot(body: PivotBody):
        searcher = state.searcher()
        triplet = searcher.pivot(tuple(body.track), body.window_s, body.max_hops)
        return triplet_to_doc(triplet)

    @app.get("/eval/report")
    def eval_report():
        text_path = state.config.path(REPORT_TEXT)
        rec_path = state.config.path(REPORT_RECORDS)
        if not text_path.exists():
            return JSONResponse({"error": "no evaluation report"}, status_code=404)
        records = [
            line for line in rec_path.read_text(encoding="utf-8").splitlines() if line
        ] if rec_path.exists() else []
        return {"text": text_path.read_text(encoding="utf-8"), "records": records}

    return app


def run_eval(state: AppState, k=None):
    """Shared by the CLI eval command and service bootstrapping."""
    gt = load_ground_truth(state.config.path(GT_FILE))
    report = run_protocol(state.store, state.graph, state.params, gt.identity_of, k=k)
    state.config.path(REPORT_TEXT).write_text(report.as_text() + "\n", encoding="utf-8")
    state.config.path(REPORT_RECORDS).write_text(report.as_records() + "\n", encoding="utf-8")
    return report
