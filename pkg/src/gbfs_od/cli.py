"""Command-line entry point: ``gbfs-od <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import shutil
import sys
import tempfile
import threading
from collections import Counter
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

from . import evaluation, exports, idregen, inference, sim
from .feed import FatalConfigError, SnapshotStore, load_feed_configs, poll_loop
from .model import DataError, EndpointKind, GbfsOdError

log = logging.getLogger("gbfs_od")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default, which we reserve for data errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- atomic outputs -------------------------------------------------------

@contextmanager
def _atomic_file(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


@contextmanager
def _atomic_dir(path: Path):
    path = path.resolve()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{path.name}.", dir=path.parent))
    try:
        yield tmp
        if path.exists():
            old = Path(tempfile.mkdtemp(prefix=f".{path.name}.old.", dir=path.parent))
            os.replace(path, old / "d")
            os.replace(tmp, path)
            shutil.rmtree(old)
        else:
            os.replace(tmp, path)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp)


def _load_store(root: str, feed: str | None = None) -> dict[str, list]:
    if not Path(root).is_dir():
        raise FileNotFoundError(f"no snapshot archive at {root}")
    store = SnapshotStore(root)
    feeds = [feed] if feed else store.feeds()
    if not feeds:
        raise DataError(f"{root} holds no feeds")
    return {f: store.load(f) for f in feeds}


def _parse_bbox(text: str):
    if text == "auto":
        return None
    vals = [float(p) for p in text.split(",")]
    if len(vals) != 4:
        raise UsageError("--bbox needs lat_min,lon_min,lat_max,lon_max or 'auto'")
    return tuple(vals)


# --- subcommands ----------------------------------------------------------

def cmd_scrape(args) -> int:
    try:
        configs = load_feed_configs(args.config)
    except FatalConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    store = SnapshotStore(args.out, fsync=args.fsync)
    stop = threading.Event()
    results: dict[str, dict] = {}
    errors: list[BaseException] = []

    def run(cfg):
        try:
            results[cfg.feed_id] = poll_loop(cfg, store, stop)
        except BaseException as exc:
            errors.append(exc)
            stop.set()

    threads = [threading.Thread(target=run, args=(c,), name=c.feed_id, daemon=True) for c in configs]
    for t in threads:
        t.start()
    try:
        stop.wait(args.duration)
    except KeyboardInterrupt:
        log.info("interrupted")
    stop.set()
    for t in threads:
        t.join()
    for feed_id, stats in sorted(results.items()):
        print(f"{feed_id}: " + " ".join(f"{k}={v}" for k, v in stats.items()))
    fatal = [e for e in errors if isinstance(e, FatalConfigError)]
    if fatal:
        log.error("%s", fatal[0])
        return EXIT_USAGE
    if errors:
        raise errors[0]
    return EXIT_OK


def cmd_simulate(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.strategy is not None:
        overrides["id_strategy"] = sim.IdStrategy(args.strategy)
    if args.fleet_size is not None:
        overrides["fleet_size"] = args.fleet_size
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.config:
        cfg = sim.load_sim_config(args.config, **overrides)
    else:
        cfg = replace(sim.SimConfig(), **overrides)
        cfg.validate()
    result = sim.simulate(cfg)
    with _atomic_dir(Path(args.out)) as tmp:
        SnapshotStore(tmp).extend(result.snapshots)
        sim.write_ground_truth(result.trips, tmp / "ground_truth.csv")
    print(f"snapshots: {len(result.snapshots)}")
    for kind, n in result.trips_by_kind().items():
        print(f"trips[{kind}]: {n}")
    return EXIT_OK


def cmd_regen(args) -> int:
    streams = _load_store(args.input, args.feed)
    with _atomic_dir(Path(args.out)) as tmp:
        store = SnapshotStore(tmp)
        for feed_id, stream in streams.items():
            if args.strategy == "resetting":
                out = idregen.regen_resetting(stream, seed=args.seed)
            else:
                out = idregen.regen_dynamic(stream, args.interval, seed=args.seed)
            store.extend(out)
            print(f"{feed_id}: {len(out)} snapshots")
    return EXIT_OK


def _inference_config(args) -> inference.InferenceConfig:
    values: dict = {}
    if args.config:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
        if not parser.read(args.config, encoding="utf-8"):
            raise FileNotFoundError(args.config)
        if "inference" in parser:
            sec = parser["inference"]
            for key in ("scrape_interval", "gap_factor", "buffer", "max_duration",
                        "max_speed_mph", "min_speed_mph"):
                if key in sec:
                    values[key] = sec.getfloat(key)
            for key in ("drop_boundary_endpoints", "include_disabled"):
                if key in sec:
                    values[key] = sec.getboolean(key)
    for key in ("scrape_interval", "gap_factor", "buffer"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    if args.keep_boundary:
        values["drop_boundary_endpoints"] = False
    if args.include_disabled:
        values["include_disabled"] = True
    filt = {}
    if "max_duration" in values:
        filt["max_duration"] = values.pop("max_duration")
    for key in ("max_speed", "min_speed"):
        if f"{key}_mph" in values:
            filt[key] = values.pop(f"{key}_mph") * inference.MPH
    return inference.InferenceConfig(filter=inference.FilterConfig(**filt), **values)


def cmd_infer(args) -> int:
    streams = _load_store(args.input, args.feed)
    cfg = _inference_config(args)
    out = Path(args.out)
    if args.algorithm == "static":
        trips = []
        rejected: Counter = Counter()
        for stream in streams.values():
            found = inference.infer_static(stream, cfg)
            if not args.no_filter:
                found, bad = inference.filter_trips(found, cfg.filter)
                rejected.update(reason for _, reason in bad)
            trips.extend(found)
        with _atomic_file(out) as tmp:
            inference.write_od_csv(trips, tmp)
        print(f"trips: {len(trips)}")
        for reason, n in sorted(rejected.items()):
            print(f"rejected[{reason}]: {n}")
        print(f"origins: {len(trips)} destinations: {len(trips)}")
        return EXIT_OK
    fn = inference.infer_resetting if args.algorithm == "resetting" else inference.infer_dynamic
    endpoints = []
    for stream in streams.values():
        endpoints.extend(fn(stream, cfg))
    with _atomic_file(out) as tmp:
        inference.write_endpoints_csv(endpoints, tmp)
    n_o = sum(e.kind == EndpointKind.ORIGIN for e in endpoints)
    print(f"origins: {n_o} destinations: {len(endpoints) - n_o}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    sizes = evaluation.parse_cell_sizes(args.cell_sizes)
    bbox = _parse_bbox(args.bbox)
    bench = inference.read_endpoints(args.benchmark)
    cand = inference.read_endpoints(args.candidate)
    reports = evaluation.sensitivity_sweep(bench, cand, sizes, bbox=bbox)
    with _atomic_dir(Path(args.out)) as tmp:
        evaluation.write_sweep_csv(reports, tmp / "sweep.csv")
        for r in reports:
            name = f"error_{r.kind.value}_{r.grid.cell_size:g}m.geojson"
            with open(tmp / name, "w", encoding="utf-8") as fh:
                json.dump(evaluation.error_surface(r, drop_zero=args.drop_zero), fh,
                          separators=(",", ":"))
    key = min(sizes, key=lambda s: abs(s - 400))
    print("cell_size kind r_squared mae sae sae_over_total")
    for r in reports:
        mark = "  <==" if r.grid.cell_size == key else ""
        print(f"{r.grid.cell_size:g} {r.kind.value} {r.r_squared:.4f} {r.mae:.4f} "
              f"{r.sae:g} {r.sae_over_total:.4f}{mark}")
    return EXIT_OK


def cmd_export_temporal(args) -> int:
    rows = exports.temporal_counts(inference.read_endpoints(args.input), args.bucket)
    with _atomic_file(Path(args.out)) as tmp:
        exports.write_rows(rows, tmp, ("vendor", "kind", "bucket", "count"))
    print(f"rows: {len(rows)}")
    return EXIT_OK


def cmd_export_density(args) -> int:
    rows = exports.density_table(inference.read_endpoints(args.input), args.cell_size,
                                 bbox=_parse_bbox(args.bbox), days=args.days)
    with _atomic_file(Path(args.out)) as tmp:
        exports.write_rows(rows, tmp, ("kind", "cell", "row", "col", "center_lat", "center_lon",
                                       "count", "density_per_day_km2"))
    print(f"cells: {len(rows)}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gbfs-od", description="Trip origin/destination inference from GBFS feeds.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("scrape", help="archive free_bike_status snapshots")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--duration", type=float, required=True, help="seconds")
    s.add_argument("--fsync", action="store_true")
    s.set_defaults(func=cmd_scrape)

    s = sub.add_parser("simulate", help="synthetic fleet with ground truth")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--strategy", choices=[x.value for x in sim.IdStrategy])
    s.add_argument("--fleet-size", type=int)
    s.add_argument("--horizon", type=int, help="seconds")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("regen-ids", help="re-issue ids under another strategy")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--strategy", choices=["resetting", "dynamic"], required=True)
    s.add_argument("--interval", type=int, default=1800)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--feed")
    s.set_defaults(func=cmd_regen)

    s = sub.add_parser("infer", help="infer trip origins and destinations")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--algorithm", choices=[a.value for a in inference.Algorithm], required=True)
    s.add_argument("--scrape-interval", type=float)
    s.add_argument("--buffer", type=float)
    s.add_argument("--gap-factor", type=float)
    s.add_argument("--out", required=True)
    s.add_argument("--no-filter", action="store_true")
    s.add_argument("--keep-boundary", action="store_true")
    s.add_argument("--include-disabled", action="store_true")
    s.add_argument("--config")
    s.add_argument("--feed")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("evaluate", help="grid sensitivity sweep against a benchmark")
    s.add_argument("--benchmark", required=True)
    s.add_argument("--candidate", required=True)
    s.add_argument("--cell-sizes", default="100..1000:100")
    s.add_argument("--bbox", default="auto")
    s.add_argument("--out", required=True)
    s.add_argument("--drop-zero", action="store_true")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("export-temporal", help="endpoint counts per time bucket")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--bucket", choices=sorted(exports.BUCKETS), default="hour")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_temporal)

    s = sub.add_parser("export-density", help="endpoint density per grid cell")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--cell-size", type=float, required=True)
    s.add_argument("--bbox", default="auto")
    s.add_argument("--days", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_density)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, sim.InvalidConfig, FatalConfigError, idregen.InvalidInterval) as exc:
        print(f"gbfs-od: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GbfsOdError, ValueError, KeyError) as exc:
        print(f"gbfs-od: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"gbfs-od: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
