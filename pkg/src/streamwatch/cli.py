"""Command-line entry point.

Subcommands:

* ``check``    — static analysis report for a specification
* ``run``      — monitor a source against a specification
* ``corpus``   — list or verify the bundled reference cases
* ``geofence`` — generate a geofence specification from a polygon file

Exit codes: 0 success; 1 rejected spec, transport failure, or failed
corpus verification; 2 triggers fired under ``--fail-on-trigger``;
64 usage/configuration errors; 130 interrupted.
"""

from __future__ import annotations

import argparse
import sys

from .adapter import EventFactory, MappingConfig, MonotonicClock, TimeMode, build_field_mapping
from .analysis import analyze, memory_bounds
from .binary_frames import BinaryFrameSchema
from .errors import (
    AnalysisFailure,
    ConfigError,
    SpecParseError,
    StreamwatchError,
    TransportError,
)
from .formats import FORMATS, make_format
from .parser import parse
from .pipeline import Pipeline
from .sinks import make_sink
from .sources import make_source

EX_USAGE = 64


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_USAGE
    except StreamwatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="streamwatch",
        description="Stream-based runtime monitoring over real-time "
        "specifications.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="statically analyze a specification")
    c.add_argument("spec", help="specification file")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("run", help="run a monitor over an event source")
    r.add_argument("spec", help="specification file")
    r.add_argument(
        "--source",
        required=True,
        help="csv:PATH | csv:- | tcp-listen:HOST:PORT | tcp-connect:HOST:PORT"
        " | udp:HOST:PORT | binary:PATH",
    )
    r.add_argument(
        "--time",
        choices=["data", "realtime"],
        default="data",
        help="timestamp mode: from the records, or wall clock at arrival",
    )
    r.add_argument(
        "--speed",
        type=float,
        default=0.0,
        help="data-mode replay factor (1 = real time, 0 = no pacing)",
    )
    r.add_argument("--map", dest="mapping", help="mapping config file (JSON)")
    r.add_argument("--frame-schema", help="binary frame schema file (JSON)")
    r.add_argument(
        "--sink", default="stdout", help="stdout | file:PATH | tcp:HOST:PORT"
    )
    r.add_argument(
        "--format", choices=sorted(FORMATS), default="text", help="verdict format"
    )
    r.add_argument(
        "--fail-on-trigger",
        action="store_true",
        help="exit 2 if any trigger fired",
    )
    r.add_argument(
        "--start-at",
        choices=["first-event", "zero"],
        default="first-event",
        help="data-mode monitor start time (periodic deadlines count from it)",
    )
    r.add_argument("-v", "--verbose", action="store_true")
    r.set_defaults(func=cmd_run)

    co = sub.add_parser("corpus", help="bundled reference specifications")
    co.add_argument(
        "action", choices=["list", "verify"], help="list cases or verify goldens"
    )
    co.add_argument("names", nargs="*", help="case names (default: all)")
    co.set_defaults(func=cmd_corpus)

    g = sub.add_parser(
        "geofence", help="generate a geofence spec from a polygon file"
    )
    g.add_argument("polygon", help="file with one 'lat, lon' vertex per line")
    g.add_argument("--horizon", type=float, default=30.0,
                   help="predicted-breach horizon in seconds")
    g.add_argument(
        "--projection", choices=["equirectangular", "planar"],
        default="equirectangular",
    )
    g.add_argument("--lat", default="lat", help="latitude input stream name")
    g.add_argument("--lon", default="lon", help="longitude input stream name")
    g.add_argument("--v-east", default="v_east", help="east velocity stream")
    g.add_argument("--v-north", default="v_north", help="north velocity stream")
    g.set_defaults(func=cmd_geofence)

    return p


def _load_spec(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read specification {path!r}: {e}")
    return analyze(parse(text))


def cmd_check(args) -> int:
    try:
        spec = _load_spec(args.spec)
    except SpecParseError as e:
        print(f"{args.spec}:{e}", file=sys.stderr)
        return 1
    except AnalysisFailure as e:
        for err in e.errors:
            where = f":{err.line}:{err.column}" if err.line else ""
            print(f"{args.spec}{where}: {err}", file=sys.stderr)
        return 1

    rows = [("stream", "type", "pacing", "layer", "memory")]
    bounds = {row.stream: row for row in memory_bounds(spec)}
    for s in spec.streams:
        rows.append(
            (
                s.name,
                str(s.ty),
                str(s.pacing),
                str(s.layer),
                bounds[s.name].describe(),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for r in rows:
        print(
            "  ".join(c.ljust(w) for c, w in zip(r[:4], widths)) + "  " + r[4]
        )
    print(
        f"accepted: {len(spec.inputs)} input(s), "
        f"{len(spec.outputs) - len(spec.triggers)} output(s), "
        f"{len(spec.triggers)} trigger(s)"
    )
    return 0


def cmd_run(args) -> int:
    try:
        spec = _load_spec(args.spec)
    except SpecParseError as e:
        print(f"{args.spec}:{e}", file=sys.stderr)
        return 1
    except AnalysisFailure as e:
        for err in e.errors:
            print(f"{args.spec}: {err}", file=sys.stderr)
        return 1

    time_mode = TimeMode.DATA if args.time == "data" else TimeMode.REALTIME
    if args.speed and time_mode is not TimeMode.DATA:
        raise ConfigError("--speed only applies to --time data")
    if args.speed < 0:
        raise ConfigError("--speed must be >= 0")

    config = (
        MappingConfig.from_file(args.mapping) if args.mapping else MappingConfig()
    )
    frame_schema = (
        BinaryFrameSchema.from_file(args.frame_schema)
        if args.frame_schema
        else None
    )
    source = make_source(args.source, config.time_field, frame_schema)
    try:
        mapping = build_field_mapping(
            spec.input_schema(), config, source.declared()
        )
    except Exception:
        source.close()
        raise

    clock = MonotonicClock() if time_mode is TimeMode.REALTIME else None
    factory = EventFactory(mapping, time_mode=time_mode, clock=clock)
    sink = make_sink(args.sink)
    pipeline = Pipeline(
        spec=spec,
        source=source,
        factory=factory,
        formatter=make_format(args.format, spec),
        sink=sink,
        time_mode=time_mode,
        speed=args.speed,
        start_at_zero=(args.start_at == "zero"),
        realtime_clock=clock,
    )
    summary = pipeline.run()
    print(summary.render(), file=sys.stderr)
    if summary.interrupted:
        return 130
    if summary.transport_error is not None:
        return 1
    if args.fail_on_trigger and summary.triggers_fired > 0:
        return 2
    return 0


def cmd_corpus(args) -> int:
    from .corpus import all_cases
    from .corpus.cases import verify_case

    cases = all_cases()
    if args.names:
        known = {c.name for c in cases}
        unknown = set(args.names) - known
        if unknown:
            raise ConfigError(
                f"unknown corpus case(s): {', '.join(sorted(unknown))} "
                f"(have: {', '.join(sorted(known))})"
            )
        cases = [c for c in cases if c.name in args.names]

    if args.action == "list":
        for case in cases:
            print(f"{case.name}: {case.description}")
            for fx in case.fixtures:
                print(f"  {fx.trace}: {fx.description}")
        return 0

    failed = 0
    for case in cases:
        for fx, ok, detail in verify_case(case):
            status = "PASS" if ok else "FAIL"
            print(f"{status} {case.name}/{fx.trace}: {detail}")
            failed += 0 if ok else 1
    return 1 if failed else 0


def cmd_geofence(args) -> int:
    from .corpus.geofence import (
        GeofencePolygon,
        GeofenceStreams,
        generate_geofence_spec,
    )

    try:
        polygon = GeofencePolygon.from_file(args.polygon)
    except (OSError, ValueError) as e:
        raise ConfigError(str(e))
    streams = GeofenceStreams(
        lat=args.lat, lon=args.lon, v_east=args.v_east, v_north=args.v_north
    )
    sys.stdout.write(
        generate_geofence_spec(
            polygon,
            streams=streams,
            projection=args.projection,
            horizon_s=args.horizon,
        )
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
