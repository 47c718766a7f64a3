"""Command-line entry points.

Exit codes: 0 success, 2 usage, 3 config or input parse failure, 4 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from .config import ConfigError, SessionConfig, load_config
from .core import Detection
from .currency import (
    CURRENCY_NAMES,
    CurrencyLabelError,
    format_amount,
    minor_per_major,
    tally_detections,
)
from .distance import CalibrationStore
from .pipeline import ScriptParseError
from .reading import assemble, blocks_from_detections
from .session import WalkParseError, load_walk, run_headless, write_log
from .simulator import Scene, SceneParseError, load_scene

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_RUNTIME = 4

DEFAULT_SCENE = "approach_chair"
DEFAULT_WALK = "approach_chair"


class CliInputError(ValueError):
    """Bad input file contents (exit code 3)."""


def resolve_scene_path(name_or_path: str) -> str:
    """A bare name refers to a bundled scene; anything else is a path."""
    if "/" in name_or_path or name_or_path.endswith(".json"):
        return name_or_path
    bundled = resources.files("soundsight.data").joinpath(f"scenes/{name_or_path}.json")
    if not bundled.is_file():
        raise CliInputError(f"no bundled scene named {name_or_path!r}")
    return str(bundled)


def resolve_walk_path(name_or_path: str) -> str:
    if "/" in name_or_path or name_or_path.endswith(".ndjson"):
        return name_or_path
    bundled = resources.files("soundsight.data").joinpath(f"walks/{name_or_path}.walk.ndjson")
    if not bundled.is_file():
        raise CliInputError(f"no bundled walk named {name_or_path!r}")
    return str(bundled)


def _load_session_inputs(args) -> tuple[SessionConfig, Scene]:
    config = load_config(args.config) if args.config else SessionConfig()
    if getattr(args, "port", None) is not None:
        config.port = args.port
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "script", None) is not None:
        config.detector_script_path = args.script
        config.detector_kind = "scripted"
    scene_arg = args.scene or config.scene_path or DEFAULT_SCENE
    scene = load_scene(resolve_scene_path(scene_arg))
    if config.seed is not None:
        scene = replace(scene, noise=replace(scene.noise, seed=config.seed))
    return config, scene


def _read_detections_file(path: str) -> list[Detection]:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise CliInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliInputError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if isinstance(data, dict):
        data = data.get("blocks", data.get("detections"))
    if not isinstance(data, list):
        raise CliInputError(f"{path}: expected a JSON array of detections")
    try:
        return [Detection.from_dict(d) for d in data]
    except (KeyError, TypeError, ValueError) as exc:
        raise CliInputError(f"{path}: bad detection entry: {exc}") from exc


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args) -> int:
    config, scene = _load_session_inputs(args)
    walk_arg = args.walk or DEFAULT_WALK
    walk = load_walk(resolve_walk_path(walk_arg))
    session = run_headless(scene, walk, config)
    if args.out:
        write_log(session, args.out)
    else:
        for env in session.log:
            print(env.to_json())
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import ServiceError, serve

    config, scene = _load_session_inputs(args)
    try:
        serve(config, scene)
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_ocr(args) -> int:
    blocks = blocks_from_detections(_read_detections_file(args.blocks))
    print(assemble(blocks))
    return EXIT_OK


def cmd_currency(args) -> int:
    detections = _read_detections_file(args.detections)
    tally = tally_detections(detections)
    if not tally.codes:
        print("no currency found")
        return EXIT_OK
    for code in tally.codes:
        minor = tally.total_minor(code)
        count = tally.note_counts[code]
        notes = "note" if count == 1 else "notes"
        print(f"{code}: {format_amount(minor, code)} ({count} {notes})")
    return EXIT_OK


def cmd_calib_dump(args) -> int:
    store = CalibrationStore(args.store)
    try:
        records = store.load()
    except OSError as exc:
        raise CliInputError(f"cannot read {args.store}: {exc}") from exc
    for rec in records:
        print(f"{rec.label}: w0={rec.w0_px:.2f}px d0={rec.d0_m:.3f}m t={rec.created_ms}ms")
    if store.skipped:
        print(f"warning: skipped {store.skipped} corrupt line(s)", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    from . import bench

    config, scene = _load_session_inputs(args)
    sizes = bench.DEFAULT_SIZES
    if args.sizes:
        try:
            sizes = tuple(int(s) for s in args.sizes.split(","))
        except ValueError as exc:
            raise CliInputError(f"bad --sizes value: {exc}") from exc
    rows = bench.run_bench(
        scene, sizes=sizes, frame_count=args.frames, seed=config.seed if config.seed is not None else 0
    )
    bench.write_csv(rows, sys.stdout)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "bench.csv", "w", encoding="utf-8", newline="") as fh:
            bench.write_csv(rows, fh)
        figure = bench.render_figure(rows, out_dir / "bench.png")
        print(f"wrote {out_dir / 'bench.csv'} and {figure}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soundsight",
        description="Assistive perception engine: simulated walks, a live service, and analysis tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_session_flags(p, with_port=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--scene", help="bundled scene name or scene JSON path")
        p.add_argument("--seed", type=int, help="override the noise seed")
        p.add_argument("--script", help="detection script (switches detector to scripted)")
        if with_port:
            p.add_argument("--port", type=int, help="listen port (0 picks a free one)")

    p = sub.add_parser("simulate", help="replay a walk script headlessly, writing the event log")
    add_session_flags(p)
    p.add_argument("--walk", help="bundled walk name or walk NDJSON path")
    p.add_argument("--out", help="log file path (stdout when omitted)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the live WebSocket service")
    add_session_flags(p, with_port=True)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ocr", help="print the reading-order text for a detections file")
    p.add_argument("blocks", help="JSON file of text-block detections")
    p.set_defaults(func=cmd_ocr)

    p = sub.add_parser("currency", help="tally a detections file and print per-currency totals")
    p.add_argument("detections", help="JSON file of detections")
    p.set_defaults(func=cmd_currency)

    p = sub.add_parser("calib", help="calibration store utilities")
    calib_sub = p.add_subparsers(dest="calib_command", required=True)
    p2 = calib_sub.add_parser("dump", help="print the records in a calibration store")
    p2.add_argument("store", help="calibration store NDJSON path")
    p2.set_defaults(func=cmd_calib_dump)

    p = sub.add_parser("bench", help="sweep input resolutions; CSV to stdout")
    add_session_flags(p)
    p.add_argument("--frames", type=int, default=40, help="frames per size (default 40)")
    p.add_argument("--sizes", help="comma-separated long-edge sizes")
    p.add_argument("--out", help="directory for bench.csv and bench.png")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SceneParseError, WalkParseError, ScriptParseError, CliInputError, CurrencyLabelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
