"""Command line entry point ``rgg``.

Exit codes: 0 success, 2 configuration or usage error, 3 data error.
Outputs are staged in a temporary directory and moved into ``--out`` only
once every file of the command has been produced.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .cluster import SpatialIndex
from .evaluation import LabelError, pr_curve, read_labels, write_labels, write_pr_csv
from .export import FORMATS, from_geojson, render
from .heading_grid import build_grid, dissimilarity, write_grid_csv
from .pipeline import NoTripsError, infer
from .roads import GraphInvariantError
from .synth import intersection_positions, simulate_trips
from .trips import ParseError, read_trips, write_trips

log = logging.getLogger("roadgraph")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


class DataError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("RGG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _commit(out_dir: Path, files: dict) -> None:
    """Write every file to a staging directory first, then move them into place."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".rgg-", dir=out_dir))
    try:
        for name, content in files.items():
            data = content.encode("utf-8") if isinstance(content, str) else content
            (stage / name).write_bytes(data)
        for name in files:
            os.replace(stage / name, out_dir / name)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def _svg(fn, *args, **kwargs) -> bytes:
    path = Path(tempfile.mkstemp(suffix=".svg")[1])
    try:
        fn(*args, path, **kwargs)
        return path.read_bytes()
    finally:
        path.unlink(missing_ok=True)


def _load_config(args):
    cfg = cfgmod.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        cfg.roads = dataclasses.replace(cfg.roads, seed=args.seed)
    if getattr(args, "workers", None) is not None:
        if args.workers < 0:
            raise cfgmod.ConfigError("--workers must be >= 0")
        cfg.workers = args.workers
    return cfg


def _read_trips(path):
    try:
        return read_trips(path)
    except OSError as exc:
        raise DataError(f"cannot read trips: {exc}") from None


def _read_graph(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return from_geojson(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read graph {path}: {exc}") from None


def cmd_infer(args) -> int:
    cfg = _load_config(args)
    source = args.input or cfg.input
    if not source:
        raise cfgmod.ConfigError("no input given (argument or [run] input)")
    trips = _read_trips(source)
    result = infer(trips, cfg)
    files = {f"graph{suffix}": text for suffix, text in render(result.graph, args.format).items()}
    if args.format != "geojson":
        files.update({f"graph{s}": t for s, t in render(result.graph, "geojson").items()})
    report = dict(result.report)
    report["config"] = cfg.to_text()
    files["report.json"] = json.dumps(report, indent=1, sort_keys=True) + "\n"
    files["validation.json"] = json.dumps(result.validation_debug, indent=1, sort_keys=True) + "\n"
    labels = io.StringIO()
    write_labels([i.position for i in result.intersections], labels, result.origin)
    files["intersections.csv"] = labels.getvalue()
    grid_csv = io.StringIO()
    write_grid_csv(result.grid, result.field, grid_csv)
    files["grid.csv"] = grid_csv.getvalue()
    if args.plot:
        from . import plot

        files["graph.svg"] = _svg(plot.plot_graph, result.graph, trips=result.trips)
        files["grid.svg"] = _svg(plot.plot_grid, result.grid, result.field,
                                 candidates=result.candidates, intersections=result.intersections,
                                 threshold=cfg.candidates.threshold)
    _commit(Path(args.out or cfg.output or "."), files)
    print(f"{len(result.intersections)} intersections, {len(result.graph.nodes)} nodes, "
          f"{len(result.graph.edges)} edges")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    graph = _read_graph(args.graph)
    predicted = np.array([n.position for n in graph.nodes if n.kind == "intersection"]).reshape(-1, 2)
    try:
        with open(args.labels, encoding="utf-8") as fh:
            head = fh.readline()
            fh.seek(0)
            is_geo = "lat" in [c.strip() for c in head.split(",")]
            if is_geo and graph.origin is None:
                raise LabelError("labels are lat,lon but the graph is in local coordinates")
            if not is_geo and graph.origin is not None:
                raise LabelError("labels are local x,y but the graph is georeferenced")
            actual, _ = read_labels(fh, graph.origin)
    except OSError as exc:
        raise DataError(f"cannot read labels: {exc}") from None
    tolerances = cfg.tolerances
    if args.tolerances:
        tolerances = cfgmod._floats(args.tolerances)
    curve = pr_curve(predicted, actual, tolerances, cfg.matching)
    out = io.StringIO()
    write_pr_csv(curve, out)
    files = {"pr_curve.csv": out.getvalue()}
    if args.plot:
        from . import plot

        files["pr_curve.svg"] = _svg(plot.plot_pr, curve)
    _commit(Path(args.out or "."), files)
    sys.stdout.write(out.getvalue())
    return EXIT_OK


def cmd_synth(args) -> int:
    site, scenario = cfgmod.load_scenario(args.config, seed=args.seed, n_trips=args.n_trips)
    trips = simulate_trips(scenario)
    buf = io.StringIO()
    write_trips(trips, buf, args.trip_format)
    labels = io.StringIO()
    write_labels(intersection_positions(site), labels, site.origin)
    files = {
        f"trips.{args.trip_format}": buf.getvalue(),
        "labels.csv": labels.getvalue(),
        "ground_truth.geojson": render(site, "geojson")[".geojson"],
    }
    _commit(Path(args.out or "."), files)
    print(f"{len(trips)} trips, {len(site.nodes)} nodes, {len(site.edges)} edges")
    return EXIT_OK


def cmd_export(args) -> int:
    graph = _read_graph(args.graph)
    stem = Path(args.graph).stem
    files = {f"{stem}{suffix}": text for suffix, text in render(graph, args.format).items()}
    _commit(Path(args.out or "."), files)
    return EXIT_OK


def cmd_plot(args) -> int:
    from . import plot

    cfg = _load_config(args)
    graph = _read_graph(args.graph)
    truth = _read_graph(args.truth) if args.truth else None
    files = {}
    trips = None
    if args.trips:
        result_trips = _read_trips(args.trips)
        from .pipeline import _preprocess_one
        from .trips import project_trips

        projected, _ = project_trips(result_trips, graph.origin)
        trips = [p for t in projected for p in _preprocess_one((t, cfg.preprocess))[0]]
        if trips:
            grid = build_grid(trips, cfg.grid.n_res, fold=cfg.grid.heading_fold,
                              min_count=cfg.grid.min_cell_count)
            field = dissimilarity(grid, cfg.candidates.d_nbr)
            inters = [n for n in graph.nodes if n.kind == "intersection"]
            files["grid.svg"] = _svg(plot.plot_grid, grid, field, intersections=inters,
                                     threshold=cfg.candidates.threshold)
    if args.validation:
        try:
            debug = json.loads(Path(args.validation).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read validation debug file: {exc}") from None
        pts = np.concatenate([t.xy for t in trips]) if trips else np.empty((0, 2))
        files["validation.svg"] = _svg(plot.plot_validation, debug, SpatialIndex(pts).points)
    files["graph.svg"] = _svg(plot.plot_graph, graph, trips=trips, truth=truth)
    _commit(Path(args.out or "."), files)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="configuration file")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--workers", type=int, metavar="N", help="0 uses every core; 1 is the reference path")
    common.add_argument("--out", metavar="DIR", help="output directory (default: current)")

    parser = argparse.ArgumentParser(prog="rgg", description="Road graphs from truck GPS trips.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", parents=[common], help="infer a road graph from trips")
    p.add_argument("input", nargs="?", help="trips file (.csv or .jsonl)")
    p.add_argument("--format", choices=FORMATS, default="geojson")
    p.add_argument("--plot", action="store_true", help="also write SVG debug plots")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", parents=[common], help="precision/recall of intersections")
    p.add_argument("graph", help="inferred graph (.geojson)")
    p.add_argument("labels", help="labeled intersections, CSV with x,y or lat,lon")
    p.add_argument("--tolerances", metavar="LIST", help="comma-separated radii in meters")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic site and trips")
    p.add_argument("--n-trips", type=int, metavar="N")
    p.add_argument("--trip-format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export", parents=[common], help="convert a graph to another format")
    p.add_argument("graph", help="graph (.geojson)")
    p.add_argument("--format", choices=FORMATS, default="geojson")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("plot", parents=[common], help="render SVG plots of a graph")
    p.add_argument("graph", help="graph (.geojson)")
    p.add_argument("--trips", help="trips file to overlay and to build the heading grid from")
    p.add_argument("--truth", help="ground-truth graph (.geojson) to overlay")
    p.add_argument("--validation", help="validation.json written by infer")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        print(f"rgg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ParseError, NoTripsError, LabelError, GraphInvariantError) as exc:
        print(f"rgg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"rgg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
