"""Run report: latency, skew, and bookkeeping counts from a run log.

Everything here is computed from the log records plus scenario ground truth
(injected clock offsets); nothing peeks at live engine state.  True-time
skew of a StartMedia fan-out is recoverable because the scenario knows each
device's injected offset: a frame telling device d to start at device-clock
T starts in true time at T - offset(d).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .scenario import Scenario


@dataclass
class RunReport:
    cue_latency_ms: dict[str, int] = field(default_factory=dict)
    media_skew: list[dict] = field(default_factory=list)  # per StartMedia fan-out
    max_skew_ms: int = 0
    ignored_count: int = 0
    undeliverable_count: int = 0
    timeout_count: int = 0
    transitions: list[dict] = field(default_factory=list)
    final_cue_states: dict[str, str] = field(default_factory=dict)
    completed: bool = False  # every cue resolved

    def to_dict(self) -> dict:
        return {
            "cue_latency_ms": self.cue_latency_ms,
            "media_skew": self.media_skew,
            "max_skew_ms": self.max_skew_ms,
            "ignored_count": self.ignored_count,
            "undeliverable_count": self.undeliverable_count,
            "timeout_count": self.timeout_count,
            "transition_count": len(self.transitions),
            "final_cue_states": self.final_cue_states,
            "completed": self.completed,
        }


def _trigger_time(cause, events_at: dict[int, int]) -> int | None:
    """Server-clock instant of whatever caused a command."""
    if isinstance(cause, int):
        return events_at.get(cause)
    if isinstance(cause, str) and "@" in cause:
        try:
            return int(cause.rsplit("@", 1)[1])
        except ValueError:
            return None
    return None


def compute_metrics(records: list[dict], scenario: Scenario) -> RunReport:
    report = RunReport()
    offsets = {d.id: d.clock_offset_ms for d in scenario.devices}
    events_at: dict[int, int] = {}
    dispatches: dict[int, list[dict]] = {}  # cmd_seq -> dispatch records
    commands: list[dict] = []

    for rec in records:
        kind = rec.get("rec")
        if kind == "event":
            events_at[int(rec["seq"])] = int(rec["at"])
        elif kind == "command":
            commands.append(rec)
        elif kind == "dispatch":
            dispatches.setdefault(int(rec["cmd_seq"]), []).append(rec)
        elif kind == "ignored":
            report.ignored_count += 1
        elif kind == "undeliverable":
            report.undeliverable_count += 1
        elif kind == "timeout":
            report.timeout_count += 1
        elif kind == "transition":
            report.transitions.append(rec)
        elif kind == "final":
            report.final_cue_states = dict(rec.get("cues", {}))
            report.completed = all(
                st in ("completed", "skipped") for st in report.final_cue_states.values()
            )

    for cmd in commands:
        cue = cmd.get("cue")
        if cue and cue not in report.cue_latency_ms:
            t = _trigger_time(cmd.get("cause"), events_at)
            if t is not None:
                report.cue_latency_ms[cue] = int(cmd["issued_at"]) - t

    for cmd in commands:
        if cmd.get("kind") != "start_media":
            continue
        sent = dispatches.get(int(cmd["seq"]), [])
        true_starts = [
            int(d["device_start_at"]) - offsets.get(d["device"], 0)
            for d in sent
            if "device_start_at" in d
        ]
        if not true_starts:
            continue
        skew = max(true_starts) - min(true_starts)
        report.media_skew.append(
            {
                "cmd_seq": int(cmd["seq"]),
                "asset": cmd.get("asset", ""),
                "devices": len(true_starts),
                "skew_ms": skew,
            }
        )
        report.max_skew_ms = max(report.max_skew_ms, skew)

    return report
