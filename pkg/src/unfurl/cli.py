"""Command-line entry point: one subcommand per pipeline stage plus `serve`.

Every interactive operation has a headless equivalent here; the acceptance
suite runs without the service.  Config comes from an INI file, overridden by
repeatable ``--set section.key=value`` flags and the shortcuts ``--seed`` /
``--output``.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import (PORT_ENV, PipelineConfig, apply_overrides)
from .errors import UnfurlError
from .pipeline import STAGE_ORDER, run_stage


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI config file (defaults built in)")
    parser.add_argument("--seed", type=int,
                        help="override the run seed (also seeds the GA)")
    parser.add_argument("--output", help="artifact root directory")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override any config key (repeatable)")


def load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides += [f"run.seed={args.seed}", f"ga.seed={args.seed}"]
    if args.output is not None:
        overrides.append(f"run.artifact_root={args.output}")
    return apply_overrides(config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unfurl",
        description="Virtual unwrapping of rolled-sheet phantoms: "
                    "simulate, calibrate, reconstruct, segment, unwrap.")
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGE_ORDER + ("all",):
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        _add_common(p)
        if stage in ("segment", "all"):
            p.add_argument("--control-points",
                           help="control points JSON (segment stage input)")
    p = sub.add_parser("serve", help="start the HTTP service")
    _add_common(p)
    p.add_argument("--port", type=int,
                   default=int(os.environ.get(PORT_ENV, "8787")),
                   help=f"listen port (env {PORT_ENV})")
    p.add_argument("--max-jobs", type=int, default=1,
                   help="maximum concurrent optimize jobs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        if args.command == "serve":
            from .service import serve
            print(f"serving artifacts from {config.paths.root} "
                  f"on http://127.0.0.1:{args.port}/v1/")
            serve(config, port=args.port, max_jobs=args.max_jobs)
            return 0
        manifest = run_stage(config, args.command,
                             control_points_path=getattr(args, "control_points", None))
        for name, entry in manifest.data.get("stages", {}).items():
            arts = ", ".join(entry.get("artifacts", {}))
            flag = " (stale)" if entry.get("stale") else ""
            print(f"{name}: {arts} [{entry.get('duration_s', 0):.2f}s]{flag}")
        print(f"manifest: {manifest.path}")
        return 0
    except UnfurlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
