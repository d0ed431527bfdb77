// Client for the pvss service: snapshot-line parsing, stream consumption,
// and the pivot round-trip (including a canonical serializer that reproduces
// the service's JSON bytes exactly).

import type {
  GraphDoc,
  PivotRequest,
  RankedEntry,
  SearchBody,
  Snapshot,
  StreamResult,
  TripletDoc,
} from "./types.js";

const ENTRY_RE = /\((\d+):(\d+),(\d+),([^,]+),([^)]+)\)/g;
const SNAPSHOT_RE = /^layer=(\d+) scanned=(\d+) list=\[(.*)\]$/;
const FINAL_RE = /^final list=\[(.*)\]$/;

export function parseEntries(body: string): RankedEntry[] {
  const out: RankedEntry[] = [];
  for (const m of body.matchAll(ENTRY_RE)) {
    out.push({
      ref: [Number(m[1]), Number(m[2])],
      cameraId: Number(m[3]),
      timestampS: Number(m[4]),
      score: Number(m[5]),
    });
  }
  return out;
}

export type StreamRecord =
  | { kind: "snapshot"; snapshot: Snapshot }
  | { kind: "final"; final: RankedEntry[] };

export function parseLine(line: string): StreamRecord {
  const final = FINAL_RE.exec(line);
  if (final) return { kind: "final", final: parseEntries(final[1]) };
  const snap = SNAPSHOT_RE.exec(line);
  if (!snap) throw new Error(`unrecognized stream line: ${line.slice(0, 80)}`);
  return {
    kind: "snapshot",
    snapshot: {
      layer: Number(snap[1]),
      scanned: Number(snap[2]),
      list: parseEntries(snap[3]),
    },
  };
}

/** Parse a whole recorded stream (one record per line). */
export function parseStream(text: string): StreamResult {
  const snapshots: Snapshot[] = [];
  let final: RankedEntry[] | null = null;
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const rec = parseLine(line);
    if (rec.kind === "snapshot") snapshots.push(rec.snapshot);
    else final = rec.final;
  }
  if (final === null) throw new Error("stream ended without a final record");
  return { snapshots, final };
}

export class ServiceError extends Error {
  constructor(public status: number, public detail: string) {
    super(`service returned ${status}: ${detail}`);
  }
}

async function raiseFor(resp: Response): Promise<void> {
  if (resp.ok) return;
  let detail = resp.statusText;
  try {
    const doc = await resp.json();
    detail = doc.detail ?? doc.error ?? detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(resp.status, detail);
}

export class PvssClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  async graph(): Promise<GraphDoc> {
    const resp = await this.fetchImpl(`${this.baseUrl}/graph`);
    await raiseFor(resp);
    return (await resp.json()) as GraphDoc;
  }

  /**
   * Open a streaming search and invoke onRecord per parsed line as chunks
   * arrive. Resolves with the full result; rejects on HTTP errors so 400/404/
   * 409 can be surfaced inline. An AbortSignal cancels the stream mid-flight.
   */
  async search(
    body: SearchBody,
    onRecord?: (rec: StreamRecord) => void,
    signal?: AbortSignal,
  ): Promise<StreamResult> {
    const resp = await this.fetchImpl(`${this.baseUrl}/search`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    await raiseFor(resp);
    const snapshots: Snapshot[] = [];
    let final: RankedEntry[] | null = null;
    const reader = resp.body!.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (value) buffer += decoder.decode(value, { stream: true });
      const lines = buffer.split("\n");
      buffer = done ? "" : lines.pop()!;
      for (const line of lines) {
        if (!line.trim()) continue;
        const rec = parseLine(line);
        if (rec.kind === "snapshot") snapshots.push(rec.snapshot);
        else final = rec.final;
        onRecord?.(rec);
      }
      if (done) break;
    }
    if (final === null) throw new Error("stream ended without a final record");
    return { snapshots, final };
  }

  /** Fetch a pivot triplet; rawBody keeps the exact bytes for round-trips. */
  async pivot(req: PivotRequest): Promise<{ triplet: TripletDoc; rawBody: string }> {
    const resp = await this.fetchImpl(`${this.baseUrl}/pivot`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    await raiseFor(resp);
    const rawBody = await resp.text();
    return { triplet: JSON.parse(rawBody) as TripletDoc, rawBody };
  }
}

// -- canonical triplet serialization ------------------------------------------
//
// The service emits compact JSON with Python float formatting. Reproducing
// those bytes lets tests prove the parse step is lossless.

export function pyFloat(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`non-finite float ${x}`);
  if (Number.isInteger(x) && Math.abs(x) < 1e16) {
    return Object.is(x, -0) ? "-0.0" : x.toFixed(1);
  }
  const [mantissa, expPart] = x.toExponential().split("e");
  const exp = Number(expPart);
  if (exp >= 16 || exp < -4) {
    const sign = exp < 0 ? "-" : "+";
    return `${mantissa}e${sign}${String(Math.abs(exp)).padStart(2, "0")}`;
  }
  return x.toString();
}

function floatArray(v: number[] | null): string {
  return v === null ? "null" : `[${v.map(pyFloat).join(",")}]`;
}

export function serializeTriplet(t: TripletDoc): string {
  return (
    `{"appearance":${floatArray(t.appearance)}` +
    `,"plate":${floatArray(t.plate)}` +
    `,"t_start":${pyFloat(t.t_start)}` +
    `,"t_end":${pyFloat(t.t_end)}` +
    `,"start_camera":${t.start_camera}` +
    `,"max_hops":${t.max_hops === null ? "null" : t.max_hops}` +
    `,"query_time_s":${t.query_time_s === null ? "null" : pyFloat(t.query_time_s)}}`
  );
}

/** Client-side form validation; returns an error message or null. */
export function validateSearchBody(body: SearchBody): string | null {
  if (!Number.isFinite(body.t_start) || !Number.isFinite(body.t_end)) {
    return "time range must be numeric";
  }
  if (body.t_start > body.t_end) return "t_start must be <= t_end";
  if (body.track === undefined && !body.appearance?.length) {
    return "pick a track or upload a feature vector";
  }
  if (body.max_hops != null && body.max_hops < 0) return "hop radius must be >= 0";
  return null;
}
