import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { parseStream } from "../src/api.js";
import { ConsoleState } from "../src/state.js";
import type { SearchBody } from "../src/types.js";

const FIXTURES = join(__dirname, "..", "fixtures");
const read = (name: string) => readFileSync(join(FIXTURES, name), "utf-8");

const body = JSON.parse(read("search.json")) as SearchBody;
const K = body.k!;

function replay(state: ConsoleState, streamFile: string) {
  const { snapshots, final } = parseStream(read(streamFile));
  for (const snap of snapshots) state.applySnapshot(snap);
  state.finishStream(final);
  return { snapshots, final };
}

describe("stream replay", () => {
  it("renders layer-by-layer with list length always <= K", () => {
    const state = new ConsoleState();
    state.beginSearch(body, K, "q1");
    const { snapshots } = parseStream(read("stream.txt"));
    snapshots.forEach((snap, i) => {
      state.applySnapshot(snap);
      expect(state.entries.length).toBeLessThanOrEqual(K);
      expect(state.lastSnapshot!.layer).toBe(i);
      // rendered list equals the latest snapshot's list, order untouched
      expect(state.entries).toEqual(snap.list.slice(0, K));
    });
  });

  it("keeps the last snapshot on interruption", () => {
    const state = new ConsoleState();
    state.beginSearch(body, K, "q1");
    const { snapshots } = parseStream(read("stream.txt"));
    state.applySnapshot(snapshots[0]);
    state.markInterrupted();
    expect(state.status).toBe("interrupted");
    expect(state.entries).toEqual(snapshots[0].list.slice(0, K));
  });

  it("caches the final list on completion", () => {
    const state = new ConsoleState();
    state.beginSearch(body, K, "q1");
    const { final } = replay(state, "stream.txt");
    expect(state.status).toBe("done");
    expect(state.activeCrumb!.finalList).toEqual(final.slice(0, K));
  });
});

describe("breadcrumbs", () => {
  it("appends one crumb per search and never reorders", () => {
    const state = new ConsoleState();
    state.beginSearch(body, K, "first");
    replay(state, "stream.txt");
    state.beginSearch(body, K, "second");
    replay(state, "stream.txt");
    expect(state.breadcrumbs.map((c) => c.label)).toEqual(["first", "second"]);
    expect(state.active).toBe(1);
  });

  it("back-navigation restores the exact prior query and cached list", () => {
    const state = new ConsoleState();
    state.beginSearch(body, K, "first");
    const { final } = replay(state, "stream.txt");
    state.beginSearch({ ...body, t_start: 500 }, K, "second");
    replay(state, "stream.txt");

    const crumb = state.restore(0);
    expect(crumb.body).toEqual(body);
    expect(state.entries).toEqual(final.slice(0, K));
    // history untouched by navigation
    expect(state.breadcrumbs.length).toBe(2);
  });

  it("refuses to restore a query that never finished", () => {
    const state = new ConsoleState();
    state.beginSearch(body, K, "first");
    expect(() => state.restore(0)).toThrow(/never finished/);
  });
});
