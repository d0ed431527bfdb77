"""Progressive vehicle search over camera networks."""

from .camera_graph import CameraGraph, TransitRecord, ViewEdge, build_graph
from .evaluator import Report, average_precision, hit_at, mean_ap, run_protocol
from .feature_index import TrackFeature, TwoLevelIndex, VectorIndex, pool_track, similarity
from .fusion_model import (
    FusionParams,
    FusionTrainer,
    StPair,
    fuse,
    init_params,
    st_distance,
    st_similarity,
    visual_similarity,
)
from .searcher import ProgressiveSearcher, QueryTriplet, RankedEntry, SearchProgress
from .synth_world import World, WorldSpec, generate
from .track_store import UNAVAL, CameraTable, TrackMetadata, TrackStore

__version__ = "0.1.0"

__all__ = [
    "CameraGraph",
    "TransitRecord",
    "ViewEdge",
    "build_graph",
    "Report",
    "average_precision",
    "hit_at",
    "mean_ap",
    "run_protocol",
    "TrackFeature",
    "TwoLevelIndex",
    "VectorIndex",
    "pool_track",
    "similarity",
    "FusionParams",
    "FusionTrainer",
    "StPair",
    "fuse",
    "init_params",
    "st_distance",
    "st_similarity",
    "visual_similarity",
    "ProgressiveSearcher",
    "QueryTriplet",
    "RankedEntry",
    "SearchProgress",
    "World",
    "WorldSpec",
    "generate",
    "UNAVAL",
    "CameraTable",
    "TrackMetadata",
    "TrackStore",
]
