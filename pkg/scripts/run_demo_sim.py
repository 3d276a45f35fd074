#!/usr/bin/env python3
"""Run the bundled demo scenarios and print what happened.

Handy while editing a show file: no server, no sockets, just the
deterministic harness.  Writes run logs out when asked.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from stagelink.compiler import compile_timeline
from stagelink.parser import parse_script
from stagelink.runlog import write_log
from stagelink.scenario import load_scenario
from stagelink.sim import run_scenario
from stagelink.validate import validate_script

SHOWS = Path(__file__).resolve().parent.parent / "shows"
DEMOS = ("hollow-lane", "signal-yard")


def run_one(name: str, seed: int | None, log_dir: Path | None) -> bool:
    scn = load_scenario(str(SHOWS / f"{name}.scn"))
    text = Path(scn.script_path).read_text(encoding="utf-8")
    script = parse_script(text, scn.script_path)
    diags = validate_script(script, scn.script_path)
    if diags:
        for d in diags:
            print(d.render(), file=sys.stderr)
        return False
    graph = compile_timeline(script)

    t0 = time.perf_counter()
    result = run_scenario(scn, script, graph, seed=seed)
    wall = (time.perf_counter() - t0) * 1000
    report = result.report

    states = report.final_cue_states
    done = sum(1 for s in states.values() if s == "completed")
    skipped = sum(1 for s in states.values() if s == "skipped")
    print(f"{name}: {'complete' if report.completed else 'INCOMPLETE'} "
          f"({done} completed, {skipped} skipped of {len(states)}) in {wall:.0f}ms wall")
    print(f"  max media skew {report.max_skew_ms}ms, "
          f"timeouts {report.timeout_count}, undeliverable {report.undeliverable_count}")
    for cue, ms in sorted(report.cue_latency_ms.items()):
        print(f"  latency {cue}: {ms}ms")

    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)
        out = log_dir / f"{name}.ndjson"
        with open(out, "w", encoding="utf-8") as fh:
            write_log(fh, result.records)
        print(f"  log -> {out}")
    return report.completed


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("show", nargs="?", choices=DEMOS + ("all",), default="all")
    ap.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    ap.add_argument("--log-dir", type=Path, default=None, help="write run logs here")
    args = ap.parse_args()

    names = DEMOS if args.show == "all" else (args.show,)
    ok = all([run_one(n, args.seed, args.log_dir) for n in names])
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
