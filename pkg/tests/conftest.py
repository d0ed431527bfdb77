import numpy as np
import pytest

from pvss.camera_graph import CameraGraph
from pvss.track_store import UNAVAL, TrackMetadata, TrackStore


def make_track(camera_id, vehicle_id, timestamp_s, d_a=8, d_p=4, rng=None,
               plate=None, track_length=5, duration_s=1.0, appearance=None,
               plate_feature=None):
    """Small valid track for unit tests."""
    rng = rng or np.random.default_rng(vehicle_id * 1000 + camera_id)
    if appearance is None:
        appearance = rng.standard_normal(d_a)
    if plate is not None and plate != UNAVAL and plate_feature is None:
        plate_feature = rng.standard_normal(d_p)
    return TrackMetadata(
        camera_id=camera_id,
        vehicle_id=vehicle_id,
        frame_id=int(timestamp_s * 25),
        track_length=track_length,
        trajectory=[(float(i), float(i)) for i in range(track_length)],
        appearance_feature=appearance,
        plate_feature=plate_feature,
        duration_s=duration_s,
        timestamp_s=float(timestamp_s),
        plate=plate or UNAVAL,
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one PASS/FAIL line per acceptance criterion at the end of the run."""
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def small_store():
    store = TrackStore(d_a=8, d_p=4)
    store.register_camera(0)
    store.register_camera(1)
    return store


@pytest.fixture
def line_graph():
    """0 -> 1 -> 2 with known distances, plus reverse edges."""
    g = CameraGraph()
    for cid in (0, 1, 2):
        g.add_node(cid, (39.9 + cid * 0.01, 116.3))
    g.add_edge(0, 1, 500.0)
    g.add_edge(1, 0, 500.0)
    g.add_edge(1, 2, 300.0)
    g.add_edge(2, 1, 300.0)
    return g
