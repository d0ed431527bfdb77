// Wire-level shapes shared across the console. These mirror the service's
// JSON schemas and its plain-text snapshot stream.

export type TrackRef = [camera: number, vehicle: number];

export interface RankedEntry {
  ref: TrackRef;
  cameraId: number;
  timestampS: number;
  score: number;
}

export interface Snapshot {
  layer: number;
  scanned: number;
  list: RankedEntry[];
}

export interface StreamResult {
  snapshots: Snapshot[];
  final: RankedEntry[];
}

/** The /pivot response body; also a valid /search request body (plus k). */
export interface TripletDoc {
  appearance: number[];
  plate: number[] | null;
  t_start: number;
  t_end: number;
  start_camera: number;
  max_hops: number | null;
  query_time_s: number | null;
}

export interface GraphNode {
  camera_id: number;
  gps: [number, number];
}

export interface GraphEdge {
  from: number;
  to: number;
  distance_m: number;
}

export interface GraphDoc {
  slot_length_s: number;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface SearchBody extends Partial<TripletDoc> {
  track?: TrackRef;
  t_start: number;
  t_end: number;
  start_camera: number;
  k?: number;
}

export interface PivotRequest {
  track: TrackRef;
  window_s: number;
  max_hops?: number | null;
}
