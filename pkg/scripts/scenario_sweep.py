#!/usr/bin/env python3
"""Determinism sweep: re-run and replay a scenario across many seeds.

For each seed the scenario is simulated twice (logs must match byte for
byte) and the log is replayed against the compiled show (commands must
match record for record).  Exits 1 on the first divergence.
"""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

from stagelink.compiler import compile_timeline
from stagelink.parser import parse_script
from stagelink.runlog import replay_check, write_log
from stagelink.scenario import load_scenario
from stagelink.sim import run_scenario
from stagelink.validate import validate_script

SHOWS = Path(__file__).resolve().parent.parent / "shows"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", nargs="?", default=str(SHOWS / "hollow-lane.scn"))
    ap.add_argument("--seeds", type=int, default=100, help="how many seeds to try")
    ap.add_argument("--base", type=int, default=0, help="first seed")
    args = ap.parse_args()

    scn = load_scenario(args.scenario)
    text = Path(scn.script_path).read_text(encoding="utf-8")
    script = parse_script(text, scn.script_path)
    diags = validate_script(script, scn.script_path)
    if diags:
        for d in diags:
            print(d.render(), file=sys.stderr)
        return 1
    graph = compile_timeline(script)

    for seed in range(args.base, args.base + args.seeds):
        first = run_scenario(scn, script, graph, seed=seed)
        second = run_scenario(scn, script, graph, seed=seed)
        a, b = io.StringIO(), io.StringIO()
        write_log(a, first.records)
        write_log(b, second.records)
        if a.getvalue() != b.getvalue():
            print(f"seed {seed}: re-run produced a different log")
            return 1
        verdict = replay_check(first.records, graph)
        if not verdict.passed:
            print(f"seed {seed}: {verdict.describe()}")
            return 1
    print(f"{args.seeds} seeds: logs stable, replays clean")
    return 0


if __name__ == "__main__":
    sys.exit(main())
