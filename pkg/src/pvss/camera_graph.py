"""Camera network topology with slot-mean travel-time weights.

The network is a directed graph. An edge (i, j) exists when a vehicle can
reappear in camera j's field of view directly after leaving camera i's.
Each edge carries a fixed road distance in meters and a piecewise-constant
travel-time model: the timeline is cut into fixed-length slots and each slot
with observed transits stores the mean and population standard deviation of
the travel times that departed in that slot.

The graph is treated as immutable once weights are learned; re-learning
returns a new graph value.
"""

from __future__ import annotations

import heapq
from collections import defaultdict, deque
import math
from dataclasses import dataclass, field

from .errors import (
    DanglingEdge,
    DuplicateCamera,
    FormatError,
    NonPositiveCost,
    NonPositiveDistance,
    UnknownCamera,
    UnknownEdge,
    UnreachablePair,
)
from .validation import fmt_float

DEFAULT_SLOT_LENGTH_S = 600.0
DEFAULT_SPEED_MPS = 10.0

_GRAPH_MAGIC = "pvss-graph"
_GRAPH_VERSION = "v1"


@dataclass(frozen=True)
class CameraNode:
    camera_id: int
    gps: tuple  # (latitude, longitude) degrees
    settings: dict = field(default_factory=dict)


@dataclass
class ViewEdge:
    from_camera: int
    to_camera: int
    spatial_distance_m: float
    # slot index -> (mean seconds, population std seconds); populated slots only
    slot_weights: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TransitRecord:
    from_camera: int
    to_camera: int
    depart_time_s: float
    cost_s: float


class CameraGraph:
    """Directed camera graph with per-edge slot-mean weight step functions."""

    def __init__(self, slot_length_s=DEFAULT_SLOT_LENGTH_S, v_default=DEFAULT_SPEED_MPS):
        self.slot_length_s = float(slot_length_s)
        self.v_default = float(v_default)
        self.nodes: dict[int, CameraNode] = {}
        self.edges: dict[tuple[int, int], ViewEdge] = {}
        self._out: dict[int, list[int]] = defaultdict(list)

    # -- construction --------------------------------------------------------

    def add_node(self, camera_id, gps=(0.0, 0.0), settings=None):
        camera_id = int(camera_id)
        if camera_id in self.nodes:
            raise DuplicateCamera(f"camera {camera_id} already in graph")
        lat, lon = gps
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            raise ValueError(f"GPS ({lat}, {lon}) out of range")
        self.nodes[camera_id] = CameraNode(camera_id, (float(lat), float(lon)), settings or {})

    def add_edge(self, from_camera, to_camera, spatial_distance_m):
        from_camera, to_camera = int(from_camera), int(to_camera)
        if from_camera not in self.nodes or to_camera not in self.nodes:
            raise DanglingEdge(f"edge ({from_camera}, {to_camera}) references unknown camera")
        if from_camera == to_camera:
            raise ValueError("self-loop edges are not allowed")
        if spatial_distance_m <= 0:
            raise NonPositiveDistance(f"distance {spatial_distance_m} must be > 0")
        self.edges[(from_camera, to_camera)] = ViewEdge(
            from_camera, to_camera, float(spatial_distance_m)
        )
        self._out[from_camera].append(to_camera)

    def neighbors(self, camera_id):
        if camera_id not in self.nodes:
            raise UnknownCamera(f"camera {camera_id} not in graph")
        return sorted(self._out.get(camera_id, ()))

    def edge(self, from_camera, to_camera) -> ViewEdge:
        e = self.edges.get((from_camera, to_camera))
        if e is None:
            raise UnknownEdge(f"no edge ({from_camera}, {to_camera})")
        return e

    # -- weight model (slot means) -------------------------------------------

    def slot_of(self, time_s):
        return int(math.floor(time_s / self.slot_length_s))

    def learn_weights(self, transits):
        """Return a copy of the graph with slot weights fitted from transits.

        For each edge and each slot holding at least one record, the slot
        weight is (mean cost, population standard deviation of cost).
        Slots without records stay absent.
        """
        per_slot = defaultdict(list)
        for rec in transits:
            key = (rec.from_camera, rec.to_camera)
            if key not in self.edges:
                raise UnknownEdge(f"transit on unknown edge {key}")
            if rec.cost_s <= 0:
                raise NonPositiveCost(f"transit cost {rec.cost_s} must be > 0")
            per_slot[(key, self.slot_of(rec.depart_time_s))].append(rec.cost_s)

        out = self.copy()
        for (key, slot), costs in per_slot.items():
            # fsum keeps the result exactly permutation-invariant
            n = len(costs)
            mean = math.fsum(costs) / n
            var = math.fsum((c - mean) ** 2 for c in costs) / n
            out.edges[key].slot_weights[slot] = (mean, math.sqrt(var))
        return out

    def weight_at(self, from_camera, to_camera, query_time_s):
        """(mean, std) seconds for the slot containing query_time_s.

        Empty slot: nearest populated slot's value (earlier slot wins ties).
        Edge with no records at all: distance-based fallback
        (m = distance / v_default, std = m / 2).
        """
        edge = self.edge(from_camera, to_camera)
        if not edge.slot_weights:
            m = edge.spatial_distance_m / self.v_default
            return (m, m / 2.0)
        slot = self.slot_of(query_time_s)
        if slot in edge.slot_weights:
            return edge.slot_weights[slot]
        nearest = min(edge.slot_weights, key=lambda k: (abs(k - slot), k))
        return edge.slot_weights[nearest]

    # -- traversal -------------------------------------------------------------

    def bfs_layers(self, start_camera, max_hops=None):
        """Camera id lists by directed hop distance; ids ascend within a layer."""
        if start_camera not in self.nodes:
            raise UnknownCamera(f"camera {start_camera} not in graph")
        seen = {start_camera}
        layers = [[start_camera]]
        frontier = deque([start_camera])
        hops = 0
        while frontier and (max_hops is None or hops < max_hops):
            nxt = set()
            for _ in range(len(frontier)):
                cam = frontier.popleft()
                for nb in self._out.get(cam, ()):
                    if nb not in seen:
                        seen.add(nb)
                        nxt.add(nb)
            if not nxt:
                break
            layer = sorted(nxt)
            layers.append(layer)
            frontier.extend(layer)
            hops += 1
        return layers

    def shortest_distances(self, source):
        """Dijkstra road distances (meters) from source over the undirected
        closure of the edge set; missing cameras are unreachable."""
        if source not in self.nodes:
            raise UnknownCamera(f"camera {source} not in graph")
        adj = defaultdict(list)
        for (a, b), e in self.edges.items():
            adj[a].append((b, e.spatial_distance_m))
            adj[b].append((a, e.spatial_distance_m))
        dist = {source: 0.0}
        heap = [(0.0, source)]
        while heap:
            d, cam = heapq.heappop(heap)
            if d > dist.get(cam, math.inf):
                continue
            for nb, w in adj[cam]:
                nd = d + w
                if nd < dist.get(nb, math.inf):
                    dist[nb] = nd
                    heapq.heappush(heap, (nd, nb))
        return dist

    def road_distance(self, from_camera, to_camera):
        if to_camera not in self.nodes:
            raise UnknownCamera(f"camera {to_camera} not in graph")
        if from_camera == to_camera:
            if from_camera not in self.nodes:
                raise UnknownCamera(f"camera {from_camera} not in graph")
            return 0.0
        dist = self.shortest_distances(from_camera)
        if to_camera not in dist:
            raise UnreachablePair(f"no path between {from_camera} and {to_camera}")
        return dist[to_camera]

    # -- misc -------------------------------------------------------------------

    def copy(self):
        g = CameraGraph(self.slot_length_s, self.v_default)
        for node in self.nodes.values():
            g.nodes[node.camera_id] = node
        for key, e in self.edges.items():
            g.edges[key] = ViewEdge(
                e.from_camera, e.to_camera, e.spatial_distance_m, dict(e.slot_weights)
            )
            g._out[e.from_camera].append(e.to_camera)
        return g

    # -- persistence ---------------------------------------------------------

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{_GRAPH_MAGIC} {_GRAPH_VERSION} slot_length={fmt_float(self.slot_length_s)}\n")
            for cid in sorted(self.nodes):
                node = self.nodes[cid]
                kv = " ".join(f"{k}={v}" for k, v in sorted(node.settings.items()))
                line = f"N {cid} {fmt_float(node.gps[0])} {fmt_float(node.gps[1])}"
                fh.write(line + (f" {kv}" if kv else "") + "\n")
            for key in sorted(self.edges):
                e = self.edges[key]
                fh.write(f"E {e.from_camera} {e.to_camera} {fmt_float(e.spatial_distance_m)}\n")
                for slot in sorted(e.slot_weights):
                    m, tau = e.slot_weights[slot]
                    fh.write(f"W {e.from_camera} {e.to_camera} {slot} {fmt_float(m)} {fmt_float(tau)}\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 3 or header[0] != _GRAPH_MAGIC:
                raise FormatError(f"bad graph header in {path}")
            if header[1] != _GRAPH_VERSION:
                raise FormatError(f"unsupported graph version {header[1]}")
            graph = cls(slot_length_s=float(header[2].split("=", 1)[1]))
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "N":
                    settings = dict(p.split("=", 1) for p in parts[4:])
                    graph.add_node(int(parts[1]), (float(parts[2]), float(parts[3])), settings)
                elif parts[0] == "E":
                    graph.add_edge(int(parts[1]), int(parts[2]), float(parts[3]))
                elif parts[0] == "W":
                    e = graph.edge(int(parts[1]), int(parts[2]))
                    e.slot_weights[int(parts[3])] = (float(parts[4]), float(parts[5]))
                else:
                    raise FormatError(f"unknown graph record {parts[0]!r}")
        return graph


def build_graph(description, slot_length_s=DEFAULT_SLOT_LENGTH_S):
    """Build a validated graph from a plain description.

    description: {"nodes": [{"camera_id", "gps", "settings"?}, ...],
                  "edges": [{"from", "to", "distance_m"}, ...]}
    """
    graph = CameraGraph(slot_length_s=slot_length_s)
    for nd in description["nodes"]:
        graph.add_node(nd["camera_id"], tuple(nd.get("gps", (0.0, 0.0))), nd.get("settings"))
    for ed in description["edges"]:
        graph.add_edge(ed["from"], ed["to"], ed["distance_m"])
    return graph


def save_transits(transits, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("pvss-transits v1\n")
        for r in transits:
            fh.write(
                f"T {r.from_camera} {r.to_camera} "
                f"{fmt_float(r.depart_time_s)} {fmt_float(r.cost_s)}\n"
            )


def load_transits(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:2] != ["pvss-transits", "v1"]:
            raise FormatError(f"bad transit file header in {path}")
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] != "T" or len(parts) != 5:
                raise FormatError(f"malformed transit record: {line[:80]}")
            out.append(
                TransitRecord(int(parts[1]), int(parts[2]), float(parts[3]), float(parts[4]))
            )
    return out
