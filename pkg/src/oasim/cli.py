"""Command line entry points: run the HTTP service, generate datasets
headlessly, validate content files, and write the demo content."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import OasimError
from .hdmap import load_hdmap
from .pipeline import ExportRequest, run_export
from .sensors import load_rig


def _data_root(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get("OASIM_DATA", "."))


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_data_root(args.data), workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_generate(args) -> int:
    req = ExportRequest(
        scenario_path=Path(args.scenario),
        out_dir=Path(args.out),
        frame_rate=args.rate,
        duration=args.duration,
        seed=args.seed,
    )
    manifest = run_export(req, data_root=_data_root(args.data))
    print(f"wrote {manifest['frame_count']} frames to {args.out}")
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    return 0


def _cmd_validate_map(args) -> int:
    graph = load_hdmap(Path(args.file))
    n_succ = sum(len(ln.successors) for ln in graph.lanes.values())
    print(f"ok: {len(graph.lanes)} lanes, {n_succ} successor links")
    return 0


def _cmd_validate_rig(args) -> int:
    rig = load_rig(Path(args.file))
    for s in rig.sensors:
        print(f"ok: {s.sensor_id} ({s.kind})")
    return 0


def _cmd_init_demo(args) -> int:
    from .sampledata import write_demo

    paths = write_demo(Path(args.dir))
    for name, path in paths.items():
        print(f"wrote {name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oasim",
        description="Simulated driving data: HTTP service and headless tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data", default=None,
                   help="data root (default: $OASIM_DATA or .)")
    p.add_argument("--workers", type=int, default=1,
                   help="generation job worker threads")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("generate", help="run one generation job headlessly")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rate", type=float, default=None, help="frames per second")
    p.add_argument("--duration", type=float, default=None, help="seconds")
    p.add_argument("--data", default=None)
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("validate-map", help="check a map file")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_validate_map)

    p = sub.add_parser("validate-rig", help="check a rig file")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_validate_rig)

    p = sub.add_parser("init-demo", help="write demo map/scene/rig/scenario")
    p.add_argument("dir")
    p.set_defaults(fn=_cmd_init_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except OasimError as exc:
        print(json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
