"""Run log: the append-only JSON Lines record of a show run.

One object per line.  The first line is a ``meta`` record carrying the
engine configuration and scenario seed so a replay can reconstruct the
exact fold.  Every consumed Event, every emitted Command, and every journal
record (transitions, ignored events, timeouts, dispatch/undeliverable notes)
gets its own line, in emission order.  The log ends with a ``run_end``
event, which doubles as the replay's final clock advance.

Records are serialized with sorted keys and compact separators, so a log is
byte-identical across runs of the same (scenario, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable

from .engine import Command, EngineConfig, Event, OperatorCmd

E_MALFORMED_LOG = "E_MALFORMED_LOG"

FORMAT_VERSION = 1


class LogError(Exception):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"{E_MALFORMED_LOG}: {message}" + (f" (line {line})" if line else ""))
        self.code = E_MALFORMED_LOG
        self.message = message
        self.line = line


def dump_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def write_log(fp: IO[str], records: Iterable[dict]) -> None:
    for rec in records:
        fp.write(dump_record(rec) + "\n")


def meta_record(
    *,
    script_path: str,
    title: str,
    seed: int,
    start_at: int,
    config: EngineConfig,
    scenario_path: str = "",
) -> dict:
    return {
        "rec": "meta",
        "format": FORMAT_VERSION,
        "script_path": script_path,
        "scenario_path": scenario_path,
        "title": title,
        "seed": seed,
        "start_at": start_at,
        "lead_ms": config.lead_ms,
        "grace_ms": config.grace_ms,
    }


def event_record(event: Event) -> dict:
    rec: dict = {"rec": "event", "seq": event.seq, "at": event.at, "kind": event.kind}
    for key in ("device", "button", "asset", "cue", "collider", "direction"):
        value = getattr(event, key)
        if value:
            rec[key] = value
    if event.cmd is not None:
        cmd: dict = {"kind": event.cmd.kind}
        if event.cmd.cue_id:
            cmd["cue_id"] = event.cmd.cue_id
        if event.cmd.scene_id:
            cmd["scene_id"] = event.cmd.scene_id
        rec["cmd"] = cmd
    return rec


def read_log(lines: Iterable[str]) -> list[dict]:
    records: list[dict] = []
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.rstrip("\n")
        if not raw:
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise LogError(f"bad JSON: {exc.msg}", lineno) from None
        if not isinstance(rec, dict) or "rec" not in rec:
            raise LogError("record is not an object with a 'rec' field", lineno)
        records.append(rec)
    if not records:
        raise LogError("log is empty")
    return records


def read_log_file(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fp:
        return read_log(fp)


def log_meta(records: list[dict]) -> dict:
    head = records[0]
    if head.get("rec") != "meta":
        raise LogError("first record must be meta")
    return head


def config_from_meta(meta: dict) -> EngineConfig:
    return EngineConfig(
        lead_ms=int(meta.get("lead_ms", EngineConfig.lead_ms)),
        grace_ms=int(meta.get("grace_ms", EngineConfig.grace_ms)),
    )


def events_from_log(records: list[dict]) -> list[Event]:
    """Extract the Event stream, enforcing seq monotonicity."""
    events: list[Event] = []
    last_seq = 0
    for index, rec in enumerate(records, start=1):
        if rec.get("rec") != "event":
            continue
        try:
            cmd = None
            if "cmd" in rec:
                c = rec["cmd"]
                cmd = OperatorCmd(
                    kind=c["kind"],
                    cue_id=c.get("cue_id", ""),
                    scene_id=c.get("scene_id", ""),
                )
            event = Event(
                seq=int(rec["seq"]),
                at=int(rec["at"]),
                kind=str(rec["kind"]),
                device=rec.get("device", ""),
                button=rec.get("button", ""),
                asset=rec.get("asset", ""),
                cue=rec.get("cue", ""),
                collider=rec.get("collider", ""),
                direction=rec.get("direction", ""),
                cmd=cmd,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise LogError(f"bad event record: {exc}", index) from None
        if event.seq <= last_seq:
            raise LogError(
                f"event seq {event.seq} not greater than {last_seq} (monotonicity)", index
            )
        last_seq = event.seq
        events.append(event)
    return events


def command_lines(records: list[dict]) -> list[str]:
    return [dump_record(rec) for rec in records if rec.get("rec") == "command"]


# --- replay check ------------------------------------------------------------


@dataclass(frozen=True)
class ReplayResult:
    passed: bool
    divergence_index: int = -1  # 0-based position in the command stream
    expected: str = ""
    actual: str = ""

    def describe(self) -> str:
        if self.passed:
            return "replay: pass"
        return (
            f"replay: divergence at command #{self.divergence_index + 1}\n"
            f"  logged:   {self.expected or '<missing>'}\n"
            f"  replayed: {self.actual or '<missing>'}"
        )


def replay_commands(records: list[dict], graph) -> list[Command]:
    from . import engine  # local import; engine does not know about logs

    meta = log_meta(records)
    events = events_from_log(records)
    return engine.replay(
        graph,
        events,
        start_at=int(meta.get("start_at", 0)),
        config=config_from_meta(meta),
    )


def replay_check(records: list[dict], graph) -> ReplayResult:
    """Re-run the engine over the logged events and diff the command lines."""
    logged = command_lines(records)
    replayed = [dump_record(cmd.to_dict()) for cmd in replay_commands(records, graph)]
    for i, (want, got) in enumerate(zip(logged, replayed)):
        if want != got:
            return ReplayResult(False, i, want, got)
    if len(logged) != len(replayed):
        i = min(len(logged), len(replayed))
        return ReplayResult(
            False,
            i,
            logged[i] if i < len(logged) else "",
            replayed[i] if i < len(replayed) else "",
        )
    return ReplayResult(True)
