"""Record frontend test fixtures from the live pvss service.

Runs the real FastAPI app over two deterministic data directories and dumps
raw response bytes, so the browser console's parsers are tested against
exactly what the service emits. Re-run after any wire-format change:

    python3 frontend/scripts/record_fixtures.py
"""

import json
import pathlib
import sys
import tempfile

import numpy as np
from fastapi.testclient import TestClient

from pvss.camera_graph import CameraGraph
from pvss.config import GRAPH_FILE, GT_FILE, INDEX_FILE, STORE_FILE, ServiceConfig
from pvss.feature_index import TwoLevelIndex
from pvss.service import AppState, create_app
from pvss.synth_world import WorldSpec, generate, save_ground_truth
from pvss.track_store import TrackMetadata, TrackStore, UNAVAL

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def write(name, data):
    path = OUT / name
    if isinstance(data, str):
        path.write_text(data, encoding="utf-8")
    else:
        path.write_bytes(data)
    print(f"wrote {path.relative_to(OUT.parent)} ({path.stat().st_size} bytes)")


def client_for(data_dir, store, graph):
    cfg = ServiceConfig(data_dir=str(data_dir))
    store.save(cfg.path(STORE_FILE))
    graph.save(cfg.path(GRAPH_FILE))
    TwoLevelIndex.from_store(store).save(cfg.path(INDEX_FILE))
    return TestClient(create_app(AppState(cfg)))


def record_generic(tmp):
    """A mid-sized synthetic world for stream replay and pivot round-trips."""
    world = generate(
        WorldSpec(n_cameras=6, n_vehicles=15, sim_duration_s=3600.0, seed=21, d_a=16, d_p=8)
    )
    store = world.to_store()
    cfg_dir = tmp / "generic"
    cfg_dir.mkdir()
    save_ground_truth(world.ground_truth, cfg_dir / "gt.pvss")
    client = client_for(cfg_dir, store, world.graph)

    write("graph.json", client.get("/graph").text)

    # pick a plated track so the pivot doc exercises the plate array too
    meta = next(m for m in world.tracks if m.plate != UNAVAL)
    body = {
        "track": list(meta.track_ref),
        "t_start": 0.0,
        "t_end": 3600.0,
        "start_camera": meta.camera_id,
        "k": 5,
    }
    write("search.json", json.dumps(body))
    write("stream.txt", client.post("/search", json=body).text)

    pivot_req = {"track": list(meta.track_ref), "window_s": 600.0, "max_hops": 2}
    write("pivot_request.json", json.dumps(pivot_req))
    write("pivot.json", client.post("/pivot", json=pivot_req).text)


def planted_track(cam, vid, t, identity_vec, plate_vec=None, plate=UNAVAL):
    length = 6
    return TrackMetadata(
        camera_id=cam,
        vehicle_id=vid,
        frame_id=int(t * 25),
        track_length=length,
        trajectory=[(float(i), float(i)) for i in range(length)],
        appearance_feature=identity_vec,
        plate_feature=plate_vec,
        duration_s=3.0,
        timestamp_s=t,
        plate=plate,
    )


def record_planted(tmp):
    """A hand-built world where one vehicle moves 0 -> 1 -> 2 along a line.

    The pursuit scenario: search at camera 0 finds the camera-1 sighting;
    pivoting on it finds the camera-2 sighting. Camera 2 is the planted
    destination the console must reach in two pivots.
    """
    rng = np.random.default_rng(77)
    graph = CameraGraph()
    for c in range(4):
        graph.add_node(c, (39.90 + 0.01 * c, 116.30 + 0.005 * c))
    for a, b in ((0, 1), (1, 2), (2, 3)):
        graph.add_edge(a, b, 300.0)
        graph.add_edge(b, a, 300.0)

    target = rng.standard_normal(8)
    target /= np.linalg.norm(target)
    plate_vec = rng.standard_normal(4)
    plate_vec /= np.linalg.norm(plate_vec)

    # visits: (camera, time, appearance, plate_vec, plate, pursued?)
    visits = [
        (cam, t, target.copy(), plate_vec.copy(), "PLT00077", True)
        for cam, t in ((0, 100.0), (1, 160.0), (2, 230.0))
    ]
    # distractors: unrelated vehicles on every camera inside the window
    for cam in range(4):
        for t in (120.0, 250.0, 400.0):
            noise = rng.standard_normal(8)
            visits.append((cam, t, noise / np.linalg.norm(noise), None, UNAVAL, False))

    # per-camera ingest must follow time order; vehicle ids count up per camera
    store = TrackStore(d_a=8, d_p=4)
    for c in range(4):
        store.register_camera(c)
    pursued = {}
    next_vid = {c: 0 for c in range(4)}
    for cam, t, vec, pvec, plate, is_target in sorted(visits, key=lambda v: (v[0], v[1])):
        vid = next_vid[cam]
        next_vid[cam] += 1
        store.ingest_track(planted_track(cam, vid, t, vec, pvec, plate))
        if is_target:
            pursued[cam] = [cam, vid]

    cfg_dir = tmp / "planted"
    cfg_dir.mkdir()
    client = client_for(cfg_dir, store, graph)

    write("planted_graph.json", client.get("/graph").text)
    body1 = {"track": pursued[0], "t_start": 100.0, "t_end": 800.0, "start_camera": 0, "k": 5}
    write("planted_search1.json", json.dumps(body1))
    write("planted_stream1.txt", client.post("/search", json=body1).text)

    pivot_req = {"track": pursued[1], "window_s": 600.0, "max_hops": 2}
    write("planted_pivot_request.json", json.dumps(pivot_req))
    pivot_resp = client.post("/pivot", json=pivot_req)
    write("planted_pivot.json", pivot_resp.text)

    body2 = dict(pivot_resp.json(), k=5)
    write("planted_stream2.txt", client.post("/search", json=body2).text)

    write(
        "planted_meta.json",
        json.dumps({"k": 5, "pursued": [pursued[0], pursued[1], pursued[2]], "destination_camera": 2}),
    )


def main():
    OUT.mkdir(exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        record_generic(tmp)
        record_planted(tmp)


if __name__ == "__main__":
    sys.exit(main())
