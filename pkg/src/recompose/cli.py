"""Command line interface.

Subcommands: `run` (single scene), `batch` (directory), `ablate` (method
comparison table), `render` (render saved parameters, no search), and
`init-config` (write the default configuration).  Every configuration key is
also a CLI flag of the same dotted name; flags override file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .ingest import IngestError
from .objective import EvaluationError, ScorerError
from .optimizer import OptimizationAborted
from .pipeline import (
    CONFIG_SCHEMA,
    PipelineConfig,
    PipelineError,
    default_config_text,
    render_at_params,
    run_ablation,
    run_batch,
    run_single,
)
from .plyio import PlyError


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="configuration file of dotted keys")
    group = parser.add_argument_group("config overrides (one flag per config key)")
    for field in CONFIG_SCHEMA:
        group.add_argument(f"--{field.key}", dest=field.key, metavar=field.kind.upper(),
                           default=None, help=field.help)


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.defaults()
    raw = vars(args)
    if raw.get("config"):
        cfg.update_from_file(raw["config"])
    for field in CONFIG_SCHEMA:
        value = raw.get(field.key)
        if value is not None:
            cfg.set(field.key, value)
    return cfg


def _fail(exc: Exception) -> int:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(payload), file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recompose",
                                     description="Search camera parameters that recompose a photograph.")
    parser.add_argument("--version", action="version", version=f"recompose {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="optimize a single scene and write artifacts")
    _add_config_flags(p_run)

    p_batch = sub.add_parser("batch", help="optimize every scene in a directory")
    p_batch.add_argument("directory", help="directory of X.png + X.depth.png/.f32 pairs or X.ply files")
    _add_config_flags(p_batch)

    p_ablate = sub.add_parser("ablate", help="compare optimizer variants over scene groups")
    p_ablate.add_argument("target", help="scene directory, or a directory of group subdirectories")
    _add_config_flags(p_ablate)

    p_render = sub.add_parser("render", help="render the scene at saved parameters, no search")
    p_render.add_argument("--params", required=True, metavar="FILE", help="best_params.json from a run")
    _add_config_flags(p_render)

    p_init = sub.add_parser("init-config", help="write the default configuration")
    p_init.add_argument("path", nargs="?", help="output file (stdout when omitted)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "init-config":
            text = default_config_text()
            if args.path:
                Path(args.path).write_text(text)
                print(f"wrote {args.path}")
            else:
                sys.stdout.write(text)
            return 0

        cfg = _build_config(args)
        if args.command == "run":
            summary = run_single(cfg)
            print(json.dumps({"input_total": summary["input"]["total"],
                              "optimized_total": summary["optimized"]["total"],
                              "evaluations": summary["search"]["evaluations"],
                              "output_dir": cfg.get("output.dir")}))
            return 0
        if args.command == "batch":
            report = run_batch(cfg, args.directory)
            print(json.dumps({"scenes": len(report["rows"]), "failures": len(report["failures"]),
                              "aggregate": report["aggregate"]}))
            if report["failures"]:
                return 2 if report["rows"] else 1
            return 0
        if args.command == "ablate":
            report = run_ablation(cfg, args.target)
            print(json.dumps({"groups": report["groups"], "table": report["table"]}))
            return 0
        if args.command == "render":
            result = render_at_params(cfg, args.params)
            print(json.dumps(result["value"]))
            return 0
        raise PipelineError(f"unknown command {args.command!r}")
    except (PipelineError, IngestError, PlyError, ScorerError, EvaluationError,
            OptimizationAborted, OSError, ValueError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
