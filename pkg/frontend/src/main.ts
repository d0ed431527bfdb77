// Browser entry point: wires the query form, streaming list, breadcrumb
// trail and camera map together. All logic lives in api/state/map; this file
// only touches the DOM.

import { PvssClient, validateSearchBody } from "./api.js";
import { renderMap } from "./map.js";
import { ConsoleState } from "./state.js";
import type { RankedEntry, SearchBody } from "./types.js";

const state = new ConsoleState();
const client = new PvssClient("");
let activeStream: AbortController | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function fmtRef(ref: [number, number]): string {
  return `${ref[0]}:${ref[1]}`;
}

function renderList(): void {
  const rows = state.entries
    .map(
      (e, i) =>
        `<tr data-ref="${fmtRef(e.ref)}"><td>${i + 1}</td><td>${fmtRef(e.ref)}</td>` +
        `<td>${e.cameraId}</td><td>${e.timestampS.toFixed(1)}</td>` +
        `<td>${e.score.toFixed(4)}</td><td><button data-pivot="${fmtRef(e.ref)}">pivot</button></td></tr>`,
    )
    .join("");
  el("results").innerHTML =
    `<table><thead><tr><th>#</th><th>track</th><th>camera</th><th>t</th><th>score</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`;
  const badge = state.lastSnapshot
    ? `layer ${state.lastSnapshot.layer} / ${state.lastSnapshot.scanned} cameras`
    : state.status;
  el("status").textContent = `${state.status} (${badge})`;
  el("reconnect").hidden = state.status !== "interrupted";
}

function renderBreadcrumbs(): void {
  el("breadcrumbs").innerHTML = state.breadcrumbs
    .map(
      (c, i) =>
        `<li${i === state.active ? ' class="active"' : ""}>` +
        `<a href="#" data-crumb="${i}">${c.label}</a></li>`,
    )
    .join("");
}

function renderMapPanel(highlight?: number[]): void {
  if (!state.graph) return;
  const start = state.activeCrumb?.body.start_camera;
  el("map").innerHTML = renderMap(state.graph, { startCamera: start, highlight });
}

async function runSearch(body: SearchBody, label: string): Promise<void> {
  const problem = validateSearchBody(body);
  if (problem) {
    el("form-error").textContent = problem;
    return;
  }
  el("form-error").textContent = "";
  activeStream?.abort(); // one live stream per tab
  activeStream = new AbortController();
  state.beginSearch(body, body.k ?? 50, label);
  renderBreadcrumbs();
  renderMapPanel();
  try {
    const result = await client.search(
      body,
      (rec) => {
        if (rec.kind === "snapshot") state.applySnapshot(rec.snapshot);
        else state.finishStream(rec.final);
        renderList();
      },
      activeStream.signal,
    );
    renderMapPanel(result.final.slice(0, 1).map((e) => e.cameraId));
  } catch (err) {
    if ((err as Error).name !== "AbortError") {
      state.markInterrupted();
      el("form-error").textContent = String(err);
      renderList();
    }
  }
}

async function pivotFrom(entry: RankedEntry): Promise<void> {
  const windowS = Number((el<HTMLSelectElement>("window-preset")).value);
  const hops = state.activeCrumb?.body.max_hops ?? null;
  const { triplet } = await client.pivot({
    track: entry.ref,
    window_s: windowS,
    max_hops: hops,
  });
  await runSearch(
    { ...triplet, k: state.activeCrumb?.k },
    `pivot ${fmtRef(entry.ref)}`,
  );
}

function readForm(): SearchBody {
  const track = el<HTMLInputElement>("track").value.trim();
  const body: SearchBody = {
    t_start: Number(el<HTMLInputElement>("t-start").value),
    t_end: Number(el<HTMLInputElement>("t-end").value),
    start_camera: Number(el<HTMLInputElement>("start-camera").value),
    k: Number(el<HTMLInputElement>("k").value) || 50,
  };
  const hops = el<HTMLInputElement>("hops").value;
  if (hops !== "") body.max_hops = Number(hops);
  if (track) {
    const [cam, veh] = track.split(":").map(Number);
    body.track = [cam, veh];
  }
  return body;
}

async function boot(): Promise<void> {
  state.graph = await client.graph();
  renderMapPanel();

  el("query-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const body = readForm();
    void runSearch(body, body.track ? fmtRef(body.track) : "feature query");
  });

  el("results").addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest("[data-pivot]");
    if (!target) return;
    const ref = target.getAttribute("data-pivot")!;
    const entry = state.entries.find((e) => fmtRef(e.ref) === ref);
    if (entry) void pivotFrom(entry);
  });

  el("breadcrumbs").addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest("[data-crumb]");
    if (!target) return;
    ev.preventDefault();
    state.restore(Number(target.getAttribute("data-crumb")));
    renderBreadcrumbs();
    renderList();
    renderMapPanel();
  });

  el("reconnect").addEventListener("click", () => {
    const crumb = state.activeCrumb;
    if (crumb) void runSearch(crumb.body, crumb.label);
  });
}

if (typeof document !== "undefined") {
  void boot();
}
