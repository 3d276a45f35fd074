"""Command line front end.

Exit codes: 0 success, 1 a check failed (validation diagnostics, replay
divergence, incomplete run), 2 usage or I/O trouble.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .compiler import compile_timeline
from .config import load_config
from .diagnostics import CompileError, ParseError, render_all
from .metrics import compute_metrics
from .model import CueGraph, ShowScript
from .parser import parse_script
from .runlog import LogError, read_log_file, replay_check, write_log
from .scenario import Scenario, load_scenario
from .sim import run_scenario
from .validate import validate_script


def _fail(message: str, code: int = 2) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_script(path: str) -> tuple[ShowScript, CueGraph] | int:
    """Parse, validate and compile; returns an exit code on failure."""
    try:
        text = _read_text(path)
    except OSError as exc:
        return _fail(f"cannot read {path}: {exc.strerror}")
    try:
        script = parse_script(text, path)
    except ParseError as exc:
        print(render_all(exc.diagnostics), file=sys.stderr)
        return 1
    diags = validate_script(script, path)
    if diags:
        print(render_all(diags), file=sys.stderr)
        return 1
    try:
        graph = compile_timeline(script)
    except CompileError as exc:
        print(f"{path}: {exc.code} {exc.message}", file=sys.stderr)
        return 1
    return script, graph


def cmd_validate(args: argparse.Namespace) -> int:
    loaded = _load_script(args.script)
    if isinstance(loaded, int):
        return loaded
    script, graph = loaded
    if not args.quiet:
        cues = sum(len(s.cues) for s in script.scenes)
        print(
            f"{args.script}: ok ({len(script.scenes)} scenes, {cues} cues, "
            f"{len(script.roster)} devices)"
        )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    from .server import run_server  # deferred: pulls in fastapi/uvicorn

    loaded = _load_script(args.script)
    if isinstance(loaded, int):
        return loaded
    script, graph = loaded
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(f"bad config: {exc}")
    if args.log:
        cfg = dataclasses.replace(cfg, log_path=args.log)
    print(
        f"serving {script.title!r}: http on {cfg.http_host}:{cfg.http_port}, "
        f"devices on {cfg.device_host}:{cfg.device_port}"
    )
    run_server(script, graph, cfg, script_path=args.script)
    return 0


def _load_scenario(path: str) -> Scenario | int:
    try:
        return load_scenario(path)
    except OSError as exc:
        return _fail(f"cannot read {path}: {exc.strerror}")
    except ParseError as exc:
        print(render_all(exc.diagnostics), file=sys.stderr)
        return 1


def cmd_sim(args: argparse.Namespace) -> int:
    scn = _load_scenario(args.scenario)
    if isinstance(scn, int):
        return scn
    loaded = _load_script(scn.script_path)
    if isinstance(loaded, int):
        return loaded
    script, graph = loaded
    result = run_scenario(scn, script, graph, seed=args.seed)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            write_log(fh, result.records)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(result.report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    report = result.report
    if not args.quiet:
        print(f"sim {scn.name!r} seed={result.records[0]['seed']}")
        print(
            f"  cues: {sum(1 for s in report.final_cue_states.values() if s == 'completed')}"
            f" completed, {sum(1 for s in report.final_cue_states.values() if s == 'skipped')}"
            f" skipped of {len(report.final_cue_states)}"
        )
        print(
            f"  media skew max: {report.max_skew_ms} ms over {len(report.media_skew)} starts"
        )
        print(
            f"  ignored: {report.ignored_count}, undeliverable: {report.undeliverable_count},"
            f" timeouts: {report.timeout_count}"
        )
    return 0 if report.completed else 1


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        records = read_log_file(args.log)
    except OSError as exc:
        return _fail(f"cannot read {args.log}: {exc.strerror}")
    except LogError as exc:
        return _fail(str(exc))
    loaded = _load_script(args.script)
    if isinstance(loaded, int):
        return loaded
    _, graph = loaded
    result = replay_check(records, graph)
    print(result.describe())
    return 0 if result.passed else 1


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        records = read_log_file(args.log)
    except OSError as exc:
        return _fail(f"cannot read {args.log}: {exc.strerror}")
    except LogError as exc:
        return _fail(str(exc))
    scn = _load_scenario(args.scenario)
    if isinstance(scn, int):
        return scn
    report = compute_metrics(records, scn)
    json.dump(report.to_dict(), sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="stagelink", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a show script")
    p.add_argument("script")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="serve a show live")
    p.add_argument("script")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--log", default=None, help="append the run log here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sim", help="run a scenario deterministically")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report", default=None, help="write the metrics report here")
    p.add_argument("--log", default=None, help="write the run log here")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("replay", help="check a log against a script")
    p.add_argument("log")
    p.add_argument("script")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("metrics", help="recompute a report from a log")
    p.add_argument("log")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_metrics)

    return top


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
