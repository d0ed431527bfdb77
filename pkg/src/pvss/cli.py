"""Command-line surface: generate, ingest, index, train, search, eval, serve."""

from __future__ import annotations

import functools
import sys

import click

from . import errors
from .camera_graph import CameraGraph, load_transits, save_transits
from .config import (
    FUSION_FILE,
    GRAPH_FILE,
    GT_FILE,
    INDEX_FILE,
    STORE_FILE,
    TRACKS_FILE,
    TRANSITS_FILE,
    ServiceConfig,
)
from .feature_index import TwoLevelIndex
from .fusion_model import save_params
from .pipeline import train_fusion
from .searcher import QueryTriplet, format_final, format_snapshot
from .service import AppState, create_app, run_eval
from .synth_world import WorldSpec, generate, load_ground_truth, save_ground_truth
from .track_store import TrackStore
from .validation import parse_vector


def _fail(exc):
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (errors.PvssError, OSError, ValueError) as exc:
            _fail(exc)

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file")
@click.option("--data", "data_dir", type=click.Path(), default=None,
              help="data directory (overrides config and PVSS_DATA)")
@click.pass_context
def main(ctx, config_path, data_dir):
    """Progressive vehicle search over camera networks."""
    ctx.obj = ServiceConfig.load(config_path, data_dir)


@main.command()
@click.option("--seed", default=0, type=int)
@click.option("--cameras", default=20, type=int)
@click.option("--vehicles", default=200, type=int)
@click.option("--duration", default=21600.0, type=float, help="simulated seconds")
@click.option("--sigma-a", default=0.18, type=float)
@click.option("--sigma-p", default=0.05, type=float)
@click.option("--p-plate", default=0.7, type=float)
@click.pass_obj
@handle_errors
def gen(cfg, seed, cameras, vehicles, duration, sigma_a, sigma_p, p_plate):
    """Generate a synthetic world into the data directory."""
    spec = WorldSpec(
        n_cameras=cameras,
        n_vehicles=vehicles,
        sim_duration_s=duration,
        sigma_a=sigma_a,
        sigma_p=sigma_p,
        p_plate=p_plate,
        seed=seed,
        slot_length_s=cfg.slot_length_s,
    )
    world = generate(spec)
    cfg.path(".").mkdir(parents=True, exist_ok=True)
    world.to_store().save(cfg.path(TRACKS_FILE))
    world.graph.save(cfg.path(GRAPH_FILE))
    save_transits(world.transits, cfg.path(TRANSITS_FILE))
    save_ground_truth(world.ground_truth, cfg.path(GT_FILE))
    click.echo(
        f"generated {len(world.tracks)} tracks, {len(world.transits)} transits, "
        f"{cameras} cameras into {cfg.data_dir}"
    )


@main.command()
@click.pass_obj
@handle_errors
def ingest(cfg):
    """Validate raw tracks and materialize the store."""
    store = TrackStore.load(cfg.path(TRACKS_FILE))
    store.save(cfg.path(STORE_FILE))
    click.echo(f"ingested {len(store)} tracks over {len(store.camera_ids())} cameras")


@main.command("learn-weights")
@click.pass_obj
@handle_errors
def learn_weights(cfg):
    """Fit slot-mean travel-time weights from the transit log."""
    graph = CameraGraph.load(cfg.path(GRAPH_FILE))
    transits = load_transits(cfg.path(TRANSITS_FILE))
    learned = graph.learn_weights(transits)
    learned.save(cfg.path(GRAPH_FILE))
    populated = sum(len(e.slot_weights) for e in learned.edges.values())
    click.echo(f"learned weights from {len(transits)} transits ({populated} populated slots)")


@main.command("build-index")
@click.option("--mode", type=click.Choice(["exact", "approx"]), default=None)
@click.pass_obj
@handle_errors
def build_index(cfg, mode):
    """Build the two-level feature index from the store."""
    if mode:
        cfg.index["mode"] = mode
    store = TrackStore.load(cfg.path(STORE_FILE))
    index = TwoLevelIndex.from_store(store, **cfg.index_params())
    index.save(cfg.path(INDEX_FILE))
    plated = 0 if index.level2 is None else len(index.level2)
    click.echo(f"indexed {len(index)} tracks (level2: {plated} plated)")


@main.command("train-fusion")
@click.option("--lam", "lam", default=None, type=float, help="visual balance lambda")
@click.option("--lr", default=None, type=float)
@click.option("--epochs", default=None, type=int)
@click.option("--batch", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.pass_obj
@handle_errors
def train_fusion_cmd(cfg, lam, lr, epochs, batch, seed):
    """Train the similarity-fusion network on labeled pairs."""
    f = cfg.fusion
    store = TrackStore.load(cfg.path(STORE_FILE))
    graph = CameraGraph.load(cfg.path(GRAPH_FILE))
    gt = load_ground_truth(cfg.path(GT_FILE))
    params, loss = train_fusion(
        store,
        graph,
        gt.identity_of,
        lam=f["lambda"] if lam is None else lam,
        lr=f["lr"] if lr is None else lr,
        epochs=f["epochs"] if epochs is None else epochs,
        batch=f["batch"] if batch is None else batch,
        seed=f["seed"] if seed is None else seed,
    )
    save_params(params, cfg.path(FUSION_FILE))
    click.echo(f"trained fusion params, final loss {loss:.6f}")


@main.command()
@click.option("--track", default=None, help="query track as CAMERA:VEHICLE")
@click.option("--feature-file", type=click.Path(exists=True), default=None,
              help="file with one comma-separated appearance vector (line 1) "
                   "and optional plate vector (line 2)")
@click.option("--camera", required=True, type=int, help="scope start camera")
@click.option("--t-start", required=True, type=float)
@click.option("--t-end", required=True, type=float)
@click.option("--hops", default=None, type=int)
@click.option("--k", default=None, type=int)
@click.pass_obj
@handle_errors
def search(cfg, track, feature_file, camera, t_start, t_end, hops, k):
    """Run a progressive search and print per-layer snapshots."""
    if t_start > t_end:
        raise click.UsageError("t_start must be <= t_end")
    if (track is None) == (feature_file is None):
        raise click.UsageError("provide exactly one of --track or --feature-file")
    state = AppState(cfg)
    if state.store is None or state.graph is None:
        raise errors.FormatError(f"data directory {cfg.data_dir} is not initialized")
    if track is not None:
        cam_s, veh_s = track.split(":")
        meta = state.store.get(int(cam_s), int(veh_s))
        appearance, plate = meta.appearance_feature, meta.plate_feature
        query_time = meta.timestamp_s
    else:
        lines = [l.strip() for l in open(feature_file, encoding="utf-8") if l.strip()]
        appearance = parse_vector(lines[0])
        plate = parse_vector(lines[1]) if len(lines) > 1 else None
        query_time = None
    triplet = QueryTriplet(
        appearance=appearance,
        plate=plate,
        t_start=t_start,
        t_end=t_end,
        start_camera=camera,
        max_hops=hops,
        query_time_s=query_time,
    )
    result = state.searcher().search(triplet, k or cfg.k_default)
    for snap in result.snapshots:
        click.echo(format_snapshot(snap))
    click.echo(format_final(result.entries))


@main.command("eval")
@click.option("--k", default=None, type=int, help="ranked list cutoff")
@click.pass_obj
@handle_errors
def eval_cmd(cfg, k):
    """Evaluate App / App+Plate / Full variants and write the report."""
    state = AppState(cfg)
    report = run_eval(state, k=k)
    click.echo(report.as_text())


@main.command()
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.pass_obj
@handle_errors
def serve(cfg, host, port):
    """Run the HTTP service over the data directory."""
    import uvicorn

    state = AppState(cfg)
    app = create_app(state)
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port)


if __name__ == "__main__":
    main()
