// Schematic camera map: GPS-projected scatter with edges, nodes colored by
// BFS layer from the active start camera. Renders to an SVG string so it is
// testable without a DOM.

import type { GraphDoc } from "./types.js";

export const LAYER_COLORS = [
  "#d62728", // layer 0: the start camera
  "#ff7f0e",
  "#2ca02c",
  "#1f77b4",
  "#9467bd",
  "#8c564b",
];

export function layerColor(layer: number): string {
  return layer < 0 ? "#999999" : LAYER_COLORS[Math.min(layer, LAYER_COLORS.length - 1)];
}

/** Directed BFS layers; cameras unreachable from start get layer -1. */
export function bfsLayers(graph: GraphDoc, start: number): Map<number, number> {
  const out = new Map<number, number[]>();
  for (const e of graph.edges) {
    if (!out.has(e.from)) out.set(e.from, []);
    out.get(e.from)!.push(e.to);
  }
  const layer = new Map<number, number>();
  for (const n of graph.nodes) layer.set(n.camera_id, -1);
  if (!layer.has(start)) return layer;
  layer.set(start, 0);
  let frontier = [start];
  let depth = 0;
  while (frontier.length) {
    depth += 1;
    const next: number[] = [];
    for (const cam of frontier) {
      for (const nb of out.get(cam) ?? []) {
        if (layer.get(nb) === -1) {
          layer.set(nb, depth);
          next.push(nb);
        }
      }
    }
    frontier = next;
  }
  return layer;
}

interface Projected {
  camera_id: number;
  x: number;
  y: number;
}

/** Equirectangular projection of camera GPS into a width x height box. */
export function project(
  graph: GraphDoc,
  width = 640,
  height = 420,
  pad = 30,
): Projected[] {
  const lats = graph.nodes.map((n) => n.gps[0]);
  const lons = graph.nodes.map((n) => n.gps[1]);
  const latSpan = Math.max(...lats) - Math.min(...lats) || 1e-9;
  const lonSpan = Math.max(...lons) - Math.min(...lons) || 1e-9;
  const lat0 = Math.min(...lats);
  const lon0 = Math.min(...lons);
  return graph.nodes.map((n) => ({
    camera_id: n.camera_id,
    x: pad + ((n.gps[1] - lon0) / lonSpan) * (width - 2 * pad),
    // screen y grows downward; latitude grows upward
    y: height - pad - ((n.gps[0] - lat0) / latSpan) * (height - 2 * pad),
  }));
}

export interface MapOptions {
  startCamera?: number;
  highlight?: number[];
  width?: number;
  height?: number;
}

export function renderMap(graph: GraphDoc, opts: MapOptions = {}): string {
  const width = opts.width ?? 640;
  const height = opts.height ?? 420;
  const points = project(graph, width, height);
  const at = new Map(points.map((p) => [p.camera_id, p]));
  const layers =
    opts.startCamera !== undefined
      ? bfsLayers(graph, opts.startCamera)
      : new Map<number, number>();
  const highlight = new Set(opts.highlight ?? []);

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="camera-map">`,
  ];
  for (const e of graph.edges) {
    const a = at.get(e.from);
    const b = at.get(e.to);
    if (!a || !b) continue;
    parts.push(
      `<line x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" ` +
        `x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}" stroke="#cccccc"/>`,
    );
  }
  for (const p of points) {
    const layer = layers.get(p.camera_id) ?? -1;
    const cls = highlight.has(p.camera_id) ? "camera highlight" : "camera";
    parts.push(
      `<circle data-camera="${p.camera_id}" data-layer="${layer}" class="${cls}" ` +
        `cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" ` +
        `r="${highlight.has(p.camera_id) ? 12 : 8}" fill="${layerColor(layer)}"/>`,
    );
    parts.push(
      `<text x="${p.x.toFixed(1)}" y="${(p.y - 14).toFixed(1)}" ` +
        `text-anchor="middle" font-size="11">${p.camera_id}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
