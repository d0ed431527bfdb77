"""Service/CLI configuration and data-directory layout."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path


# conventional file names inside the data directory
TRACKS_FILE = "tracks.pvss"
STORE_FILE = "store.pvss"
GRAPH_FILE = "graph.pvss"
TRANSITS_FILE = "transits.pvss"
GT_FILE = "gt.pvss"
INDEX_FILE = "index.pvss"
FUSION_FILE = "fusion.pvss"
REPORT_TEXT = "report.txt"
REPORT_RECORDS = "report.ndjson"


@dataclass
class ServiceConfig:
    data_dir: str = "."
    host: str = "127.0.0.1"
    port: int = 8321
    k_default: int = 50
    slot_length_s: float = 600.0
    index: dict = field(
        default_factory=lambda: {
            "mode": "exact",
            "trees": 48,
            "leaf_size": 96,
            "search_k": None,
            "recall_target": 0.95,
            "seed": 0,
        }
    )
    fusion: dict = field(
        default_factory=lambda: {
            "lambda": 0.5,
            "lr": 0.5,
            "epochs": 80,
            "batch": 64,
            "seed": 42,
        }
    )
    search: dict = field(
        default_factory=lambda: {"stage_ratio": 5, "early_stop": False, "shortlist_all": False}
    )

    @classmethod
    def load(cls, path=None, data_dir=None):
        """Config file values, then PVSS_DATA, then explicit data_dir override."""
        cfg = cls()
        if path:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
            for key in ("data_dir", "host", "port", "k_default", "slot_length_s"):
                if key in raw:
                    setattr(cfg, key, raw[key])
            for section in ("index", "fusion", "search"):
                if section in raw:
                    getattr(cfg, section).update(raw[section])
        env_dir = os.environ.get("PVSS_DATA")
        if env_dir:
            cfg.data_dir = env_dir
        if data_dir:
            cfg.data_dir = data_dir
        return cfg

    def path(self, name) -> Path:
        return Path(self.data_dir) / name

    def index_params(self):
        idx = self.index
        return dict(
            mode=idx.get("mode", "exact"),
            trees=int(idx.get("trees", 48)),
            leaf_size=int(idx.get("leaf_size", 96)),
            search_k=idx.get("search_k"),
            seed=int(idx.get("seed", 0)),
        )
