"""Simulation scenarios: scripted virtual devices for headless runs.

A scenario names a show script and describes the cast of virtual devices:
when they join, their injected clock offset, how faithfully they report
media ends, timed button presses, pose paths, and disconnect windows.  An
operator track holds timed operator commands.  Text (``.scn``) and JSON
(``.scn.json``) encodings mirror the show-script dual format.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

from .diagnostics import E_SYNTAX, E_UNKNOWN_FIELD, Diagnostic, ParseError
from .engine import OP_FIRE, OP_HOLD, OP_JUMP, OP_RESUME, OP_SKIP, OperatorCmd
from .parser import Token, _tokenize

FIDELITY_HONEST = "honest"
FIDELITY_DROP = "drop"
FIDELITY_DELAY = "delay"


@dataclass(frozen=True)
class MediaFidelity:
    kind: str = FIDELITY_HONEST
    p: float = 0.0  # drop probability
    delay_ms: int = 0  # fixed extra delay on media_ended


@dataclass(frozen=True)
class DeviceSpec:
    id: str
    join_at: int = 0
    clock_offset_ms: int = 0
    media: MediaFidelity = MediaFidelity()
    presses: tuple[tuple[int, str], ...] = ()  # (at, button)
    path: tuple[tuple[int, float, float, float], ...] = ()  # (at, x, y, z)
    drops: tuple[tuple[int, int], ...] = ()  # (disconnect_at, reconnect_at)


@dataclass(frozen=True)
class OperatorAction:
    at: int
    cmd: OperatorCmd


@dataclass(frozen=True)
class Scenario:
    name: str = ""
    script_path: str = ""
    seed: int = 0
    net_delay_ms: int = 0
    net_jitter_ms: int = 0
    end_at: int | None = None
    devices: tuple[DeviceSpec, ...] = ()
    operator: tuple[OperatorAction, ...] = ()
    source_path: str = ""  # where this scenario was loaded from, if a file


_OP_KINDS = {
    "fire": OP_FIRE,
    "skip": OP_SKIP,
    "hold": OP_HOLD,
    "resume": OP_RESUME,
    "jump": OP_JUMP,
}


class _ScnParser:
    def __init__(self, path: str):
        self.path = path
        self.diags: list[Diagnostic] = []
        self.top: dict = {
            "name": "",
            "script": "",
            "seed": 0,
            "delay": 0,
            "jitter": 0,
            "end": None,
        }
        self.devices: list[DeviceSpec] = []
        self.operator: list[OperatorAction] = []
        self.cur: dict | None = None  # device build state

    def err(self, msg: str, lineno: int, col: int = 1, code: str = E_SYNTAX) -> None:
        self.diags.append(Diagnostic(code, msg, lineno, col, self.path))

    def close_device(self) -> None:
        if self.cur is None:
            return
        d = self.cur
        self.cur = None
        if d.get("op"):
            return
        self.devices.append(
            DeviceSpec(
                id=d["id"],
                join_at=d["join"],
                clock_offset_ms=d["offset"],
                media=d["media"],
                presses=tuple(d["presses"]),
                path=tuple(d["path"]),
                drops=tuple(d["drops"]),
            )
        )

    def _int(self, tok: Token, lineno: int) -> int:
        try:
            return int(tok.text)
        except ValueError:
            self.err(f"expected an integer, got {tok.text!r}", lineno, tok.col)
            return 0

    def _float(self, tok: Token, lineno: int) -> float:
        try:
            return float(tok.text)
        except ValueError:
            self.err(f"expected a number, got {tok.text!r}", lineno, tok.col)
            return 0.0

    def line(self, raw: str, lineno: int) -> None:
        toks = _tokenize(raw, lineno, self.diags, self.path)
        if not toks:
            return
        head = toks[0]
        is_header = toks[-1].text.endswith(":") and not toks[-1].quoted
        if is_header:
            trimmed = toks[-1].text[:-1]
            toks = toks[:-1] + ([Token(trimmed, toks[-1].col)] if trimmed else [])
            head = toks[0] if toks else head
            if head.text == "device" and len(toks) == 2:
                self.close_device()
                self.cur = {
                    "id": toks[1].text,
                    "join": 0,
                    "offset": 0,
                    "media": MediaFidelity(),
                    "presses": [],
                    "path": [],
                    "drops": [],
                    "op": False,
                }
                return
            if head.text == "operator" and len(toks) == 1:
                self.close_device()
                self.cur = {"op": True}
                return
            self.err(f"unknown section header {head.text!r}", lineno, head.col)
            return

        if self.cur is None:
            self.top_line(head, toks, lineno)
        elif self.cur.get("op"):
            self.operator_line(head, toks, lineno)
        else:
            self.device_line(head, toks, lineno)

    def top_line(self, head: Token, toks: list[Token], lineno: int) -> None:
        if head.text == "scenario" and len(toks) == 2:
            self.top["name"] = toks[1].text
        elif head.text == "script" and len(toks) == 2:
            self.top["script"] = toks[1].text
        elif head.text == "seed" and len(toks) == 2:
            self.top["seed"] = self._int(toks[1], lineno)
        elif head.text == "net" and len(toks) == 3:
            self.top["delay"] = self._int(toks[1], lineno)
            self.top["jitter"] = self._int(toks[2], lineno)
        elif head.text == "end" and len(toks) == 2:
            self.top["end"] = self._int(toks[1], lineno)
        else:
            self.err(f"unknown scenario directive {head.text!r}", lineno, head.col)

    def device_line(self, head: Token, toks: list[Token], lineno: int) -> None:
        d = self.cur
        assert d is not None
        if head.text == "join" and len(toks) == 2:
            d["join"] = self._int(toks[1], lineno)
        elif head.text == "offset" and len(toks) == 2:
            d["offset"] = self._int(toks[1], lineno)
        elif head.text == "media":
            self.media_line(d, toks, lineno)
        elif head.text == "press" and len(toks) == 3:
            d["presses"].append((self._int(toks[1], lineno), toks[2].text))
        elif head.text == "pose" and len(toks) == 5:
            d["path"].append(
                (
                    self._int(toks[1], lineno),
                    self._float(toks[2], lineno),
                    self._float(toks[3], lineno),
                    self._float(toks[4], lineno),
                )
            )
        elif head.text == "drop" and len(toks) == 3:
            t0 = self._int(toks[1], lineno)
            t1 = self._int(toks[2], lineno)
            if t1 <= t0:
                self.err("reconnect time must be after disconnect time", lineno, toks[2].col)
            d["drops"].append((t0, t1))
        else:
            self.err(f"unknown device directive {head.text!r}", lineno, head.col)

    def media_line(self, d: dict, toks: list[Token], lineno: int) -> None:
        if len(toks) == 2 and toks[1].text == FIDELITY_HONEST:
            d["media"] = MediaFidelity()
        elif len(toks) == 3 and toks[1].text == FIDELITY_DROP:
            p = self._float(toks[2], lineno)
            if not 0.0 <= p <= 1.0:
                self.err("drop probability must be in [0, 1]", lineno, toks[2].col)
            d["media"] = MediaFidelity(FIDELITY_DROP, p=p)
        elif len(toks) == 3 and toks[1].text == FIDELITY_DELAY:
            d["media"] = MediaFidelity(FIDELITY_DELAY, delay_ms=self._int(toks[2], lineno))
        else:
            self.err("media takes: honest | drop <p> | delay <ms>", lineno, toks[0].col)

    def operator_line(self, head: Token, toks: list[Token], lineno: int) -> None:
        if head.text != "at" or len(toks) < 3:
            self.err("operator lines look like: at <ms> <command> [id]", lineno, head.col)
            return
        at = self._int(toks[1], lineno)
        kind = _OP_KINDS.get(toks[2].text)
        if kind is None:
            self.err(f"unknown operator command {toks[2].text!r}", lineno, toks[2].col)
            return
        arg = toks[3].text if len(toks) > 3 else ""
        if kind in (OP_FIRE, OP_SKIP):
            if not arg:
                self.err(f"{toks[2].text} needs a cue id", lineno, toks[2].col)
                return
            cmd = OperatorCmd(kind, cue_id=arg)
        elif kind == OP_JUMP:
            if not arg:
                self.err("jump needs a scene id", lineno, toks[2].col)
                return
            cmd = OperatorCmd(kind, scene_id=arg)
        else:
            cmd = OperatorCmd(kind)
        self.operator.append(OperatorAction(at, cmd))

    def run(self, text: str) -> Scenario:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            self.line(raw, lineno)
        self.close_device()
        if not self.top["script"]:
            self.err("scenario does not name a script", 1)
        if self.diags:
            raise ParseError(self.diags)
        return Scenario(
            name=self.top["name"],
            script_path=self.top["script"],
            seed=self.top["seed"],
            net_delay_ms=self.top["delay"],
            net_jitter_ms=self.top["jitter"],
            end_at=self.top["end"],
            devices=tuple(self.devices),
            operator=tuple(sorted(self.operator, key=lambda a: a.at)),
        )


def _scenario_from_json(obj: dict, path: str) -> Scenario:
    diags: list[Diagnostic] = []
    allowed = {"name", "script", "seed", "net_delay_ms", "net_jitter_ms", "end_at", "devices", "operator"}
    for key in obj:
        if key not in allowed:
            diags.append(Diagnostic(E_UNKNOWN_FIELD, f"unknown field {key!r}", 1, 1, path))
    devices = []
    for d in obj.get("devices", []):
        m = d.get("media", {})
        devices.append(
            DeviceSpec(
                id=str(d.get("id", "")),
                join_at=int(d.get("join_at", 0)),
                clock_offset_ms=int(d.get("clock_offset_ms", 0)),
                media=MediaFidelity(
                    kind=str(m.get("kind", FIDELITY_HONEST)),
                    p=float(m.get("p", 0.0)),
                    delay_ms=int(m.get("delay_ms", 0)),
                ),
                presses=tuple((int(a), str(b)) for a, b in d.get("presses", [])),
                path=tuple(
                    (int(w[0]), float(w[1]), float(w[2]), float(w[3]))
                    for w in d.get("path", [])
                ),
                drops=tuple((int(a), int(b)) for a, b in d.get("drops", [])),
            )
        )
        if devices[-1].media.kind == FIDELITY_DROP and not 0.0 <= devices[-1].media.p <= 1.0:
            diags.append(
                Diagnostic(E_SYNTAX, "drop probability must be in [0, 1]", 1, 1, path)
            )
    operator = []
    for a in obj.get("operator", []):
        kind = str(a.get("kind", ""))
        if kind not in _OP_KINDS.values():
            diags.append(
                Diagnostic(E_SYNTAX, f"unknown operator command {kind!r}", 1, 1, path)
            )
            continue
        operator.append(
            OperatorAction(
                int(a.get("at", 0)),
                OperatorCmd(kind, cue_id=str(a.get("cue_id", "")), scene_id=str(a.get("scene_id", ""))),
            )
        )
    if not obj.get("script"):
        diags.append(Diagnostic(E_SYNTAX, "scenario does not name a script", 1, 1, path))
    if diags:
        raise ParseError(diags)
    return Scenario(
        name=str(obj.get("name", "")),
        script_path=str(obj.get("script", "")),
        seed=int(obj.get("seed", 0)),
        net_delay_ms=int(obj.get("net_delay_ms", 0)),
        net_jitter_ms=int(obj.get("net_jitter_ms", 0)),
        end_at=(None if obj.get("end_at") is None else int(obj["end_at"])),
        devices=tuple(devices),
        operator=tuple(sorted(operator, key=lambda a: a.at)),
    )


def parse_scenario(text: str, path: str = "<scenario>") -> Scenario:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(
                [Diagnostic(E_SYNTAX, f"bad JSON: {exc.msg}", exc.lineno, exc.colno, path)]
            ) from None
        return _scenario_from_json(obj, path)
    return _ScnParser(path).run(text)


def load_scenario(path: str) -> Scenario:
    """Parse a scenario file; the script path resolves relative to it."""
    with open(path, encoding="utf-8") as fp:
        scn = parse_scenario(fp.read(), path)
    script_path = scn.script_path
    if script_path and not os.path.isabs(script_path):
        script_path = os.path.normpath(
            os.path.join(os.path.dirname(os.path.abspath(path)), script_path)
        )
    return replace(scn, script_path=script_path, source_path=path)


def scenario_to_json(scn: Scenario) -> dict:
    devices = []
    for d in scn.devices:
        entry: dict = {"id": d.id, "join_at": d.join_at, "clock_offset_ms": d.clock_offset_ms}
        media: dict = {"kind": d.media.kind}
        if d.media.kind == FIDELITY_DROP:
            media["p"] = d.media.p
        if d.media.kind == FIDELITY_DELAY:
            media["delay_ms"] = d.media.delay_ms
        entry["media"] = media
        if d.presses:
            entry["presses"] = [[at, b] for at, b in d.presses]
        if d.path:
            entry["path"] = [[at, x, y, z] for at, x, y, z in d.path]
        if d.drops:
            entry["drops"] = [[a, b] for a, b in d.drops]
        devices.append(entry)
    operator = []
    for a in scn.operator:
        entry = {"at": a.at, "kind": a.cmd.kind}
        if a.cmd.cue_id:
            entry["cue_id"] = a.cmd.cue_id
        if a.cmd.scene_id:
            entry["scene_id"] = a.cmd.scene_id
        operator.append(entry)
    out: dict = {
        "name": scn.name,
        "script": scn.script_path,
        "seed": scn.seed,
        "net_delay_ms": scn.net_delay_ms,
        "net_jitter_ms": scn.net_jitter_ms,
        "devices": devices,
        "operator": operator,
    }
    if scn.end_at is not None:
        out["end_at"] = scn.end_at
    return out
