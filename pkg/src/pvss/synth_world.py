"""Desk-scale synthetic surveillance worlds with known ground truth.

Generates a strongly connected directed camera graph, per-vehicle random
walks over it, transit records with slot-dependent travel-time means, and
per-visit track metadata whose features are noisy copies of per-identity
prototype vectors. Everything is drawn from one seeded generator, so a seed
fully determines the world.

Travel times are normal around distance / speed(slot) with a small
coefficient of variation and are resampled when below mean / 4, matching the
observation that within one time slot different vehicles take similar times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera_graph import CameraGraph, TransitRecord
from .errors import FormatError, InfeasibleSpec
from .track_store import TrackMetadata, TrackStore, UNAVAL


@dataclass(frozen=True)
class WorldSpec:
    n_cameras: int = 20
    n_vehicles: int = 200
    sim_duration_s: float = 21600.0  # 6 h
    slot_speed_multipliers: tuple = (1.0, 0.7, 1.3, 0.9, 1.15, 0.8)
    sigma_a: float = 0.18  # appearance feature noise, per component
    sigma_p: float = 0.05  # plate feature noise, per component
    p_plate: float = 0.7
    seed: int = 0
    d_a: int = 64
    d_p: int = 32
    slot_length_s: float = 600.0
    base_speed_mps: float = 10.0
    travel_cv: float = 0.15
    session_s: tuple = (900.0, 1800.0)
    extra_edges: int | None = None  # default: n_cameras
    fps: float = 25.0


@dataclass
class GroundTruth:
    identity_of: dict  # (camera_id, vehicle_id) -> identity
    app_prototypes: dict = field(default_factory=dict)
    plate_prototypes: dict = field(default_factory=dict)


@dataclass
class World:
    spec: WorldSpec
    graph: CameraGraph
    transits: list
    tracks: list  # TrackMetadata, camera ascending then time ascending
    ground_truth: GroundTruth

    def to_store(self) -> TrackStore:
        store = TrackStore(d_a=self.spec.d_a, d_p=self.spec.d_p)
        for cid in self.graph.nodes:
            store.register_camera(cid)
        for meta in self.tracks:
            store.ingest_track(meta)
        return store


def _unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _noisy_unit(rng, proto, sigma):
    v = proto + sigma * rng.standard_normal(proto.shape[0])
    n = np.linalg.norm(v)
    if n == 0.0:
        return proto.copy()
    return v / n


def generate(spec: WorldSpec) -> World:
    if spec.n_cameras < 2:
        raise InfeasibleSpec("need at least 2 cameras for a connected walkable graph")
    if spec.n_vehicles < 1 or spec.sim_duration_s <= 0:
        raise InfeasibleSpec("need >= 1 vehicle and a positive duration")
    if not 0.0 <= spec.p_plate <= 1.0 or spec.sigma_a < 0 or spec.sigma_p < 0:
        raise InfeasibleSpec("noise/availability parameters out of range")

    rng = np.random.default_rng(spec.seed)

    # topology: bidirectional ring over a shuffled camera order keeps the
    # graph strongly connected; extra directed chords add shortcuts
    graph = CameraGraph(slot_length_s=spec.slot_length_s)
    for cid in range(spec.n_cameras):
        lat = 39.9 + rng.uniform(-0.05, 0.05)
        lon = 116.3 + rng.uniform(-0.05, 0.05)
        graph.add_node(cid, (lat, lon))
    ring = rng.permutation(spec.n_cameras)
    for i in range(spec.n_cameras):
        a, b = int(ring[i]), int(ring[(i + 1) % spec.n_cameras])
        if (a, b) not in graph.edges:
            graph.add_edge(a, b, float(rng.uniform(200.0, 800.0)))
        if (b, a) not in graph.edges:
            graph.add_edge(b, a, float(rng.uniform(200.0, 800.0)))
    n_extra = spec.n_cameras if spec.extra_edges is None else spec.extra_edges
    # cannot place more chords than the complete digraph has room for
    n_extra = min(n_extra, spec.n_cameras * (spec.n_cameras - 1) - len(graph.edges))
    added = 0
    while added < n_extra:
        a = int(rng.integers(spec.n_cameras))
        b = int(rng.integers(spec.n_cameras))
        if a == b or (a, b) in graph.edges:
            continue
        graph.add_edge(a, b, float(rng.uniform(200.0, 800.0)))
        added += 1

    multipliers = spec.slot_speed_multipliers

    def planted_mean(distance_m, depart_s):
        slot = int(depart_s // spec.slot_length_s)
        return distance_m / (spec.base_speed_mps * multipliers[slot % len(multipliers)])

    transits = []
    visits = []  # (camera_id, timestamp_s, duration_s, identity, order)
    order = 0
    for identity in range(spec.n_vehicles):
        entry = float(rng.uniform(0.0, max(spec.sim_duration_s - spec.session_s[0], 1.0)))
        session_end = min(
            entry + float(rng.uniform(*spec.session_s)), spec.sim_duration_s
        )
        cam = int(rng.integers(spec.n_cameras))
        t = entry
        while t < session_end:
            duration = float(rng.uniform(2.0, 10.0))
            visits.append((cam, t, duration, identity, order))
            order += 1
            neighbors = graph.neighbors(cam)
            nxt = int(neighbors[rng.integers(len(neighbors))])
            depart = t + duration
            mean = planted_mean(graph.edge(cam, nxt).spatial_distance_m, depart)
            sd = spec.travel_cv * mean
            cost = float(rng.normal(mean, sd))
            while cost < mean / 4.0:
                cost = float(rng.normal(mean, sd))
            if depart >= spec.sim_duration_s:
                break
            transits.append(TransitRecord(cam, nxt, depart, cost))
            t = depart + cost
            cam = nxt

    # prototypes per identity
    gt = GroundTruth(identity_of={})
    for identity in range(spec.n_vehicles):
        gt.app_prototypes[identity] = _unit(rng, spec.d_a)
        gt.plate_prototypes[identity] = _unit(rng, spec.d_p)

    # per-camera vehicle ids follow timestamp order (ties by generation order)
    tracks = []
    for cam in range(spec.n_cameras):
        cam_visits = sorted(
            (v for v in visits if v[0] == cam), key=lambda v: (v[1], v[4])
        )
        for vehicle_id, (_, t, duration, identity, _) in enumerate(cam_visits):
            track_length = max(5, int(duration * spec.fps))
            x0, y0 = rng.uniform(0, 100, size=2)
            dx, dy = rng.uniform(-2, 2, size=2)
            trajectory = [(x0 + dx * i, y0 + dy * i) for i in range(track_length)]
            appearance = _noisy_unit(rng, gt.app_prototypes[identity], spec.sigma_a)
            if rng.uniform() < spec.p_plate:
                plate = f"P{identity:05d}"
                plate_vec = _noisy_unit(rng, gt.plate_prototypes[identity], spec.sigma_p)
            else:
                plate = UNAVAL
                plate_vec = None
            tracks.append(
                TrackMetadata(
                    camera_id=cam,
                    vehicle_id=vehicle_id,
                    frame_id=int(t * spec.fps),
                    track_length=track_length,
                    trajectory=trajectory,
                    appearance_feature=appearance,
                    plate_feature=plate_vec,
                    duration_s=duration,
                    timestamp_s=t,
                    plate=plate,
                )
            )
            gt.identity_of[(cam, vehicle_id)] = identity

    return World(spec, graph, transits, tracks, gt)


# -- ground-truth file ------------------------------------------------------------


def save_ground_truth(gt: GroundTruth, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("pvss-gt v1\n")
        for (cam, vid), identity in sorted(gt.identity_of.items()):
            fh.write(f"GT {cam} {vid} {identity}\n")


def load_ground_truth(path) -> GroundTruth:
    identity_of = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:2] != ["pvss-gt", "v1"]:
            raise FormatError(f"bad ground-truth header in {path}")
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] != "GT" or len(parts) != 4:
                raise FormatError(f"malformed ground-truth record: {line[:80]}")
            identity_of[(int(parts[1]), int(parts[2]))] = int(parts[3])
    return GroundTruth(identity_of=identity_of)
