// Console state: the live result list, snapshot bookkeeping, and the pivot
// breadcrumb trail. Pure data + invariants; no DOM here.

import type {
  GraphDoc,
  RankedEntry,
  SearchBody,
  Snapshot,
  TrackRef,
} from "./types.js";

export interface Breadcrumb {
  label: string;
  body: SearchBody;
  k: number;
  /** Cached once the stream completes, so back-navigation is instant. */
  finalList: RankedEntry[] | null;
}

export function sameRef(a: TrackRef, b: TrackRef): boolean {
  return a[0] === b[0] && a[1] === b[1];
}

export type StreamStatus = "idle" | "streaming" | "done" | "interrupted";

export class ConsoleState {
  graph: GraphDoc | null = null;
  /** Append-only pursuit history; never reordered or truncated. */
  readonly breadcrumbs: Breadcrumb[] = [];
  /** Index of the query whose results are on screen. */
  active = -1;
  entries: RankedEntry[] = [];
  lastSnapshot: Snapshot | null = null;
  status: StreamStatus = "idle";

  get activeCrumb(): Breadcrumb | null {
    return this.active >= 0 ? this.breadcrumbs[this.active] : null;
  }

  /** Start a new search: appends a breadcrumb and resets the live list. */
  beginSearch(body: SearchBody, k: number, label: string): Breadcrumb {
    const crumb: Breadcrumb = { label, body, k, finalList: null };
    this.breadcrumbs.push(crumb);
    this.active = this.breadcrumbs.length - 1;
    this.entries = [];
    this.lastSnapshot = null;
    this.status = "streaming";
    return crumb;
  }

  /**
   * Apply one per-layer snapshot. The rendered list is exactly the snapshot's
   * list, clamped to K — never merged or reordered client-side.
   */
  applySnapshot(snap: Snapshot): void {
    const crumb = this.activeCrumb;
    if (!crumb) throw new Error("snapshot received with no active query");
    this.lastSnapshot = snap;
    this.entries = snap.list.slice(0, crumb.k);
  }

  finishStream(final: RankedEntry[]): void {
    const crumb = this.activeCrumb;
    if (!crumb) throw new Error("final list received with no active query");
    crumb.finalList = final.slice(0, crumb.k);
    this.entries = crumb.finalList;
    this.status = "done";
  }

  /** Connection dropped: keep the last consistent snapshot on screen. */
  markInterrupted(): void {
    this.status = "interrupted";
  }

  /**
   * Back-navigation: re-activate an earlier query and its cached final list.
   * The breadcrumb trail itself is untouched (append-only, acyclic).
   */
  restore(index: number): Breadcrumb {
    const crumb = this.breadcrumbs[index];
    if (!crumb) throw new Error(`no breadcrumb at ${index}`);
    if (crumb.finalList === null) throw new Error("query never finished streaming");
    this.active = index;
    this.entries = crumb.finalList;
    this.lastSnapshot = null;
    this.status = "done";
    return crumb;
  }

  /** Best candidate other than the track we pivoted from ("where next"). */
  nextHop(exclude: TrackRef): RankedEntry | null {
    return this.entries.find((e) => !sameRef(e.ref, exclude)) ?? null;
  }

  /** Best candidate seen by any camera other than the given one. */
  firstAtOtherCamera(cameraId: number): RankedEntry | null {
    return this.entries.find((e) => e.cameraId !== cameraId) ?? null;
  }
}
