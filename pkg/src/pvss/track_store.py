"""Per-camera, time-ordered storage of vehicle track metadata.

Each camera owns an append-only table sorted by timestamp. Ingest validates
structural invariants and refuses out-of-order timestamps (an out-of-order
arrival signals an upstream clock or pipeline fault, so we fail loudly
instead of silently re-sorting). Range scans use bisection on the sorted
timestamp column.

Concurrency: single writer, many readers. Appends happen under a lock and
readers only ever observe a consistent prefix of each table.
"""

from __future__ import annotations

import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateTrack,
    FormatError,
    InvalidTrack,
    OutOfOrderTimestamp,
    RejectedShortTrack,
    UnknownCamera,
    UnknownTrack,
)
from .validation import check_vector, fmt_float, fmt_vector, parse_vector

MIN_TRACK_LENGTH = 5

UNAVAL = "UNAVAL"

_STORE_MAGIC = "pvss-tracks"
_STORE_VERSION = "v1"


@dataclass
class TrackMetadata:
    """One vehicle's image-sequence record from one camera."""

    camera_id: int
    vehicle_id: int
    frame_id: int
    track_length: int
    trajectory: list  # [(x, y), ...] one point per frame
    appearance_feature: np.ndarray
    plate_feature: np.ndarray | None
    duration_s: float
    timestamp_s: float
    plate: str = UNAVAL

    @property
    def track_ref(self):
        return (self.camera_id, self.vehicle_id)


@dataclass
class CameraTable:
    """Time-ordered, append-only sequence of tracks for one camera."""

    camera_id: int
    entries: list = field(default_factory=list)
    _timestamps: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)


class TrackStore:
    """Map of camera tables with validated ingest and range scans."""

    def __init__(self, d_a=2048, d_p=1024):
        self.d_a = int(d_a)
        self.d_p = int(d_p)
        self._tables: dict[int, CameraTable] = {}
        self._by_ref: dict[tuple[int, int], TrackMetadata] = {}
        self._lock = threading.Lock()

    # -- camera registry ---------------------------------------------------

    def register_camera(self, camera_id):
        with self._lock:
            self._tables.setdefault(int(camera_id), CameraTable(int(camera_id)))

    def camera_ids(self):
        return sorted(self._tables)

    def __len__(self):
        return len(self._by_ref)

    # -- ingest ------------------------------------------------------------

    def _validate(self, meta: TrackMetadata):
        if meta.camera_id not in self._tables:
            raise UnknownCamera(f"camera {meta.camera_id} not registered")
        if meta.track_length < MIN_TRACK_LENGTH:
            raise RejectedShortTrack(
                f"track length {meta.track_length} < {MIN_TRACK_LENGTH}"
            )
        if len(meta.trajectory) != meta.track_length:
            raise InvalidTrack(
                f"trajectory has {len(meta.trajectory)} points, "
                f"track_length is {meta.track_length}"
            )
        if meta.duration_s <= 0:
            raise InvalidTrack(f"duration_s must be > 0, got {meta.duration_s}")
        meta.appearance_feature = check_vector(
            meta.appearance_feature, self.d_a, "appearance_feature"
        )
        has_plate = meta.plate != UNAVAL
        if has_plate != (meta.plate_feature is not None):
            raise InvalidTrack(
                "plate string and plate_feature must be both present or both absent"
            )
        if meta.plate_feature is not None:
            meta.plate_feature = check_vector(
                meta.plate_feature, self.d_p, "plate_feature"
            )

    def ingest_track(self, meta: TrackMetadata):
        """Validate and append; returns the stable (camera_id, vehicle_id) ref."""
        self._validate(meta)
        with self._lock:
            table = self._tables[meta.camera_id]
            if meta.track_ref in self._by_ref:
                raise DuplicateTrack(f"{meta.track_ref} already ingested")
            if table._timestamps and meta.timestamp_s < table._timestamps[-1]:
                raise OutOfOrderTimestamp(
                    f"camera {meta.camera_id}: timestamp {meta.timestamp_s} "
                    f"precedes table tail {table._timestamps[-1]}"
                )
            table.entries.append(meta)
            table._timestamps.append(meta.timestamp_s)
            self._by_ref[meta.track_ref] = meta
        return meta.track_ref

    # -- reads ---------------------------------------------------------------

    def scan(self, camera_id, t_start, t_end):
        """All tracks of one camera with t_start <= timestamp_s <= t_end."""
        if t_start > t_end:
            raise ValueError("t_start must be <= t_end")
        table = self._tables.get(camera_id)
        if table is None:
            raise UnknownCamera(f"camera {camera_id} not registered")
        lo = bisect_left(table._timestamps, t_start)
        hi = bisect_right(table._timestamps, t_end)
        return table.entries[lo:hi]

    def get(self, camera_id, vehicle_id) -> TrackMetadata:
        meta = self._by_ref.get((camera_id, vehicle_id))
        if meta is None:
            raise UnknownTrack(f"no track ({camera_id}, {vehicle_id})")
        return meta

    def all_tracks(self):
        """All tracks over all cameras, camera ascending then time ascending."""
        out = []
        for cid in self.camera_ids():
            out.extend(self._tables[cid].entries)
        return out

    # -- persistence ---------------------------------------------------------
    # One record per line, Table-1 field order with appearance and plate
    # vectors as two adjacent fields; timestamp_s appended last (derived
    # field, needed for exact round-trips). Floats use shortest exact repr.

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{_STORE_MAGIC} {_STORE_VERSION} D_a={self.d_a} D_p={self.d_p}\n")
            for cid in self.camera_ids():
                if not self._tables[cid].entries:
                    fh.write(f"C\t{cid}\n")
            for meta in self.all_tracks():
                traj = ";".join(f"{fmt_float(x)},{fmt_float(y)}" for x, y in meta.trajectory)
                plate_vec = "" if meta.plate_feature is None else fmt_vector(meta.plate_feature)
                fh.write(
                    "\t".join(
                        [
                            str(meta.camera_id),
                            str(meta.vehicle_id),
                            str(meta.frame_id),
                            str(meta.track_length),
                            traj,
                            fmt_vector(meta.appearance_feature),
                            plate_vec,
                            fmt_float(meta.duration_s),
                            meta.plate,
                            fmt_float(meta.timestamp_s),
                        ]
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split()
            if len(header) != 4 or header[0] != _STORE_MAGIC:
                raise FormatError(f"bad track store header in {path}")
            if header[1] != _STORE_VERSION:
                raise FormatError(f"unsupported track store version {header[1]}")
            d_a = int(header[2].split("=", 1)[1])
            d_p = int(header[3].split("=", 1)[1])
            store = cls(d_a=d_a, d_p=d_p)
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("C\t"):
                    store.register_camera(int(line.split("\t")[1]))
                    continue
                parts = line.split("\t")
                if len(parts) != 10:
                    raise FormatError(f"malformed track record: {line[:80]}")
                traj = [
                    tuple(float(c) for c in pt.split(","))
                    for pt in parts[4].split(";")
                    if pt
                ]
                meta = TrackMetadata(
                    camera_id=int(parts[0]),
                    vehicle_id=int(parts[1]),
                    frame_id=int(parts[2]),
                    track_length=int(parts[3]),
                    trajectory=traj,
                    appearance_feature=parse_vector(parts[5]),
                    plate_feature=parse_vector(parts[6]),
                    duration_s=float(parts[7]),
                    plate=parts[8],
                    timestamp_s=float(parts[9]),
                )
                store.register_camera(meta.camera_id)
                store.ingest_track(meta)
        return store
