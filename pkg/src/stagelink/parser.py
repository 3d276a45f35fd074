"""Show script parsing and serialization.

Two interchangeable encodings of the same model:

* a line-oriented structured text format (``.show``), written by humans
  during rehearsal.  Sections are introduced by ``roster:``, ``assets:``,
  ``colliders:`` and ``scene <id> [phase]:`` headers; cues open with
  ``cue <id> [blocking]:`` and hold one ``trigger`` line plus action lines.
* a JSON object (``.show.json``) for machine interchange.

``parse_script`` accepts either (JSON is detected by a leading ``{``) and
raises :class:`ParseError` carrying every diagnostic it could collect.
``serialize_script`` / ``script_to_json`` emit canonical forms that parse
back to a structurally equal ``ShowScript``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .diagnostics import (
    E_DUP_ID,
    E_SYNTAX,
    E_UNKNOWN_FIELD,
    Diagnostic,
    ParseError,
)
from .model import (
    ASSET_KINDS,
    BUZZ_PATTERNS,
    PHASE_MAIN,
    PHASES,
    SUBJECT_FILTERS,
    Action,
    AdvanceScene,
    AssetDecl,
    AutoAfterTrigger,
    BoxShape,
    BuzzAction,
    ColliderDecl,
    ColliderTrigger,
    ContentEndTrigger,
    Cue,
    DeviceDecl,
    Loc,
    ManualTrigger,
    OperatorTrigger,
    PlayMedia,
    Scene,
    ShowScript,
    SphereShape,
    StopMedia,
    Targets,
    Trigger,
)

SECTION_HEADERS = ("roster", "assets", "colliders", "scene", "cue")


@dataclass(frozen=True)
class Token:
    text: str
    col: int  # 1-based
    quoted: bool = False


class _LineError(Exception):
    """Internal: abandon the current line, keep parsing the rest."""


def _tokenize(line: str, lineno: int, diags: list[Diagnostic], path: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(line)
    while i < n:
        ch = line[i]
        if ch in " \t":
            i += 1
            continue
        if ch == "#":
            break
        if ch == '"':
            start = i
            i += 1
            while i < n and line[i] != '"':
                i += 1
            if i >= n:
                diags.append(
                    Diagnostic(E_SYNTAX, "unterminated string", lineno, start + 1, path)
                )
                raise _LineError()
            tokens.append(Token(line[start + 1 : i], start + 1, quoted=True))
            i += 1
            continue
        start = i
        while i < n and line[i] not in ' \t#"':
            i += 1
        tokens.append(Token(line[start:i], start + 1))
    return tokens


class _TextParser:
    def __init__(self, path: str):
        self.path = path
        self.diags: list[Diagnostic] = []
        self.title = ""
        self.title_seen = False
        self.roster: list[DeviceDecl] = []
        self.assets: list[AssetDecl] = []
        self.colliders: list[ColliderDecl] = []
        self.scenes: list[Scene] = []
        # mutable build state
        self.section: str | None = None
        self.cur_scene: dict | None = None  # id, phase, cues, notes, loc
        self.cur_cue: dict | None = None  # id, blocking, trigger, actions, notes, loc

    # -- diagnostics helpers ------------------------------------------------

    def err(self, code: str, msg: str, token: Token | None, lineno: int) -> None:
        col = token.col if token else 1
        self.diags.append(Diagnostic(code, msg, lineno, col, self.path))

    def bail(self, code: str, msg: str, token: Token | None, lineno: int):
        self.err(code, msg, token, lineno)
        raise _LineError()

    # -- field readers ------------------------------------------------------

    def take(self, toks: list[Token], idx: int, what: str, lineno: int) -> Token:
        if idx >= len(toks):
            self.bail(E_SYNTAX, f"missing {what}", toks[-1] if toks else None, lineno)
        return toks[idx]

    def take_int(self, toks: list[Token], idx: int, what: str, lineno: int) -> int:
        t = self.take(toks, idx, what, lineno)
        try:
            return int(t.text)
        except ValueError:
            self.bail(E_SYNTAX, f"{what} must be an integer, got {t.text!r}", t, lineno)
        raise AssertionError  # unreachable

    def take_float(self, toks: list[Token], idx: int, what: str, lineno: int) -> float:
        t = self.take(toks, idx, what, lineno)
        try:
            return float(t.text)
        except ValueError:
            self.bail(E_SYNTAX, f"{what} must be a number, got {t.text!r}", t, lineno)
        raise AssertionError

    def no_extra(self, toks: list[Token], idx: int, lineno: int) -> None:
        if len(toks) > idx:
            self.bail(
                E_UNKNOWN_FIELD,
                f"unexpected token {toks[idx].text!r}",
                toks[idx],
                lineno,
            )

    # -- structure ----------------------------------------------------------

    def close_cue(self) -> None:
        if self.cur_cue is None:
            return
        c = self.cur_cue
        self.cur_cue = None
        if c["trigger"] is None:
            self.diags.append(
                Diagnostic(
                    E_SYNTAX,
                    f"cue {c['id']!r} has no trigger line",
                    c["loc"].line,
                    c["loc"].col,
                    self.path,
                )
            )
            return
        assert self.cur_scene is not None
        self.cur_scene["cues"].append(
            Cue(
                id=c["id"],
                trigger=c["trigger"],
                actions=tuple(c["actions"]),
                blocking=c["blocking"],
                notes=tuple(c["notes"]),
                loc=c["loc"],
            )
        )

    def close_scene(self) -> None:
        self.close_cue()
        if self.cur_scene is None:
            return
        s = self.cur_scene
        self.cur_scene = None
        self.scenes.append(
            Scene(
                id=s["id"],
                phase=s["phase"],
                cues=tuple(s["cues"]),
                notes=tuple(s["notes"]),
                loc=s["loc"],
            )
        )

    # -- line dispatch --------------------------------------------------------

    def parse_line(self, raw: str, lineno: int) -> None:
        toks = _tokenize(raw, lineno, self.diags, self.path)
        if not toks:
            return
        # headers end with ':' (either fused to the last token or standalone)
        has_colon = False
        if toks[-1].text == ":":
            has_colon = True
            toks = toks[:-1]
        elif not toks[-1].quoted and toks[-1].text.endswith(":"):
            has_colon = True
            toks = toks[:-1] + [Token(toks[-1].text[:-1], toks[-1].col)]
            if not toks[-1].text:
                toks = toks[:-1]
        if not toks:
            self.bail(E_SYNTAX, "empty header", None, lineno)
        head = toks[0]

        if head.text in SECTION_HEADERS:
            if not has_colon:
                self.bail(E_SYNTAX, f"{head.text} header must end with ':'", head, lineno)
            self.parse_header(head, toks, lineno)
            return
        if has_colon:
            self.bail(E_SYNTAX, f"unexpected ':' after {head.text!r}", head, lineno)

        if head.text == "show":
            if self.title_seen:
                self.bail(E_SYNTAX, "title already declared", head, lineno)
            t = self.take(toks, 1, "show title", lineno)
            self.no_extra(toks, 2, lineno)
            self.title = t.text
            self.title_seen = True
            return

        if self.section == "roster":
            self.parse_roster_entry(head, toks, lineno)
        elif self.section == "assets":
            self.parse_asset_entry(head, toks, lineno)
        elif self.section == "colliders":
            self.parse_collider_entry(head, toks, lineno)
        elif self.section == "scene":
            self.parse_scene_entry(head, toks, lineno)
        else:
            self.bail(E_SYNTAX, f"{head.text!r} outside any section", head, lineno)

    def parse_header(self, head: Token, toks: list[Token], lineno: int) -> None:
        if head.text in ("roster", "assets", "colliders"):
            self.close_scene()
            self.no_extra(toks, 1, lineno)
            self.section = head.text
            return
        if head.text == "scene":
            self.close_scene()
            ident = self.take(toks, 1, "scene id", lineno)
            phase = PHASE_MAIN
            idx = 2
            if len(toks) > 2:
                if toks[2].text not in PHASES:
                    self.bail(
                        E_UNKNOWN_FIELD,
                        f"unknown scene phase {toks[2].text!r}",
                        toks[2],
                        lineno,
                    )
                phase = toks[2].text
                idx = 3
            self.no_extra(toks, idx, lineno)
            self.section = "scene"
            self.cur_scene = {
                "id": ident.text,
                "phase": phase,
                "cues": [],
                "notes": [],
                "loc": Loc(lineno, ident.col),
            }
            return
        # cue
        if self.cur_scene is None:
            self.bail(E_SYNTAX, "cue outside a scene", head, lineno)
        self.close_cue()
        ident = self.take(toks, 1, "cue id", lineno)
        blocking = False
        idx = 2
        if len(toks) > 2:
            if toks[2].text != "blocking":
                self.bail(
                    E_UNKNOWN_FIELD,
                    f"unknown cue flag {toks[2].text!r}",
                    toks[2],
                    lineno,
                )
            blocking = True
            idx = 3
        self.no_extra(toks, idx, lineno)
        self.cur_cue = {
            "id": ident.text,
            "blocking": blocking,
            "trigger": None,
            "actions": [],
            "notes": [],
            "loc": Loc(lineno, ident.col),
        }

    # -- section entries --------------------------------------------------------

    def parse_roster_entry(self, head: Token, toks: list[Token], lineno: int) -> None:
        if head.text not in ("hmd", "wearable"):
            self.bail(E_SYNTAX, f"unknown device role {head.text!r}", head, lineno)
        ident = self.take(toks, 1, "device id", lineno)
        label = ""
        idx = 2
        if len(toks) > 2:
            label = toks[2].text
            idx = 3
        self.no_extra(toks, idx, lineno)
        self.roster.append(
            DeviceDecl(ident.text, head.text, label, loc=Loc(lineno, ident.col))
        )

    def parse_asset_entry(self, head: Token, toks: list[Token], lineno: int) -> None:
        if head.text not in ASSET_KINDS:
            self.bail(E_SYNTAX, f"unknown asset kind {head.text!r}", head, lineno)
        ident = self.take(toks, 1, "asset id", lineno)
        duration = self.take_int(toks, 2, "asset duration (ms)", lineno)
        uri = self.take(toks, 3, "asset uri", lineno)
        self.no_extra(toks, 4, lineno)
        self.assets.append(
            AssetDecl(ident.text, head.text, duration, uri.text, loc=Loc(lineno, ident.col))
        )

    def _collider_tail(
        self, toks: list[Token], idx: int, lineno: int
    ) -> tuple[str, float | None, int | None]:
        subject = SUBJECT_FILTERS[0]
        hyst: float | None = None
        debounce: int | None = None
        seen_filter = False
        for t in toks[idx:]:
            if t.text.startswith("h="):
                try:
                    hyst = float(t.text[2:])
                except ValueError:
                    self.bail(E_SYNTAX, f"bad hysteresis {t.text!r}", t, lineno)
            elif t.text.startswith("debounce="):
                try:
                    debounce = int(t.text[len("debounce=") :])
                except ValueError:
                    self.bail(E_SYNTAX, f"bad debounce {t.text!r}", t, lineno)
            elif t.text in SUBJECT_FILTERS and not seen_filter:
                subject = t.text
                seen_filter = True
            else:
                self.bail(E_UNKNOWN_FIELD, f"unknown collider option {t.text!r}", t, lineno)
        return subject, hyst, debounce

    def parse_collider_entry(self, head: Token, toks: list[Token], lineno: int) -> None:
        if head.text == "sphere":
            ident = self.take(toks, 1, "collider id", lineno)
            cx = self.take_float(toks, 2, "center x", lineno)
            cy = self.take_float(toks, 3, "center y", lineno)
            cz = self.take_float(toks, 4, "center z", lineno)
            r = self.take_float(toks, 5, "radius", lineno)
            subject, hyst, debounce = self._collider_tail(toks, 6, lineno)
            shape: SphereShape | BoxShape = SphereShape((cx, cy, cz), r)
        elif head.text == "box":
            ident = self.take(toks, 1, "collider id", lineno)
            vals = [self.take_float(toks, 2 + i, "box corner", lineno) for i in range(6)]
            subject, hyst, debounce = self._collider_tail(toks, 8, lineno)
            shape = BoxShape(tuple(vals[:3]), tuple(vals[3:]))
        else:
            self.bail(E_SYNTAX, f"unknown collider shape {head.text!r}", head, lineno)
            return
        self.colliders.append(
            ColliderDecl(
                ident.text,
                shape,
                subject_filter=subject,
                hysteresis_m=hyst,
                debounce_ms=debounce,
                loc=Loc(lineno, ident.col),
            )
        )

    def parse_scene_entry(self, head: Token, toks: list[Token], lineno: int) -> None:
        assert self.cur_scene is not None
        if head.text == "note":
            t = self.take(toks, 1, "note text", lineno)
            self.no_extra(toks, 2, lineno)
            target = self.cur_cue if self.cur_cue is not None else self.cur_scene
            target["notes"].append(t.text)
            return
        if self.cur_cue is None:
            self.bail(E_SYNTAX, f"{head.text!r} outside a cue", head, lineno)
        if head.text == "trigger":
            self.parse_trigger(toks, lineno)
        elif head.text in ("play", "stop", "buzz", "advance"):
            self.parse_action(head, toks, lineno)
        else:
            self.bail(E_SYNTAX, f"unknown cue directive {head.text!r}", head, lineno)

    def parse_trigger(self, toks: list[Token], lineno: int) -> None:
        assert self.cur_cue is not None
        if self.cur_cue["trigger"] is not None:
            self.bail(E_SYNTAX, "cue already has a trigger", toks[0], lineno)
        kind = self.take(toks, 1, "trigger kind", lineno)
        loc = Loc(lineno, toks[0].col)
        trig: Trigger
        if kind.text == "manual":
            dev = self.take(toks, 2, "device id", lineno)
            btn = self.take(toks, 3, "button id", lineno)
            self.no_extra(toks, 4, lineno)
            trig = ManualTrigger(dev.text, btn.text, loc=loc)
        elif kind.text == "auto_after":
            pred = self.take(toks, 2, "predecessor cue id", lineno)
            delay = self.take_int(toks, 3, "delay (ms)", lineno)
            self.no_extra(toks, 4, lineno)
            trig = AutoAfterTrigger(pred.text, delay, loc=loc)
        elif kind.text == "content_end":
            pred = self.take(toks, 2, "predecessor cue id", lineno)
            self.no_extra(toks, 3, lineno)
            trig = ContentEndTrigger(pred.text, loc=loc)
        elif kind.text in ("collider_enter", "collider_exit"):
            cid = self.take(toks, 2, "collider id", lineno)
            self.no_extra(toks, 3, lineno)
            direction = "enter" if kind.text == "collider_enter" else "exit"
            trig = ColliderTrigger(cid.text, direction, loc=loc)
        elif kind.text == "operator":
            self.no_extra(toks, 2, lineno)
            trig = OperatorTrigger(loc=loc)
        else:
            self.bail(E_SYNTAX, f"unknown trigger kind {kind.text!r}", kind, lineno)
            return
        self.cur_cue["trigger"] = trig

    def _parse_targets(self, t: Token, lineno: int) -> Targets:
        if t.text == "all-hmds":
            return Targets.group()
        devices = tuple(x for x in t.text.split(",") if x)
        if not devices:
            self.bail(E_SYNTAX, "empty target list", t, lineno)
        return Targets.of(*devices)

    def parse_action(self, head: Token, toks: list[Token], lineno: int) -> None:
        assert self.cur_cue is not None
        loc = Loc(lineno, head.col)
        action: Action
        if head.text == "play":
            asset = self.take(toks, 1, "asset id", lineno)
            targets = self._parse_targets(self.take(toks, 2, "targets", lineno), lineno)
            offset = 0
            idx = 3
            if len(toks) > 3:
                offset = self.take_int(toks, 3, "start offset (ms)", lineno)
                idx = 4
            self.no_extra(toks, idx, lineno)
            action = PlayMedia(asset.text, targets, offset, loc=loc)
        elif head.text == "stop":
            asset = self.take(toks, 1, "asset id", lineno)
            targets = self._parse_targets(self.take(toks, 2, "targets", lineno), lineno)
            self.no_extra(toks, 3, lineno)
            action = StopMedia(asset.text, targets, loc=loc)
        elif head.text == "buzz":
            dev = self.take(toks, 1, "device id", lineno)
            pat = self.take(toks, 2, "buzz pattern", lineno)
            if pat.text not in BUZZ_PATTERNS:
                self.bail(E_SYNTAX, f"unknown buzz pattern {pat.text!r}", pat, lineno)
            self.no_extra(toks, 3, lineno)
            action = BuzzAction(dev.text, pat.text, loc=loc)
        else:  # advance
            self.no_extra(toks, 1, lineno)
            action = AdvanceScene(loc=loc)
        self.cur_cue["actions"].append(action)

    # -- entry --------------------------------------------------------------

    def run(self, document: str) -> ShowScript:
        for lineno, raw in enumerate(document.splitlines(), start=1):
            try:
                self.parse_line(raw, lineno)
            except _LineError:
                continue
        self.close_scene()
        if not self.scenes and not any(d.code == E_SYNTAX for d in self.diags):
            self.diags.append(Diagnostic(E_SYNTAX, "no scenes declared", 1, 1, self.path))
        script = ShowScript(
            title=self.title,
            roster=tuple(self.roster),
            assets=tuple(self.assets),
            colliders=tuple(self.colliders),
            scenes=tuple(self.scenes),
        )
        self.diags.extend(duplicate_id_diagnostics(script, self.path))
        if self.diags:
            raise ParseError(self.diags)
        return script


def duplicate_id_diagnostics(script: ShowScript, path: str) -> list[Diagnostic]:
    """Report every duplicate occurrence in each id namespace."""
    diags: list[Diagnostic] = []

    def check(kind: str, items) -> None:
        seen: set[str] = set()
        for item in items:
            if item.id in seen:
                diags.append(
                    Diagnostic(
                        E_DUP_ID,
                        f"duplicate {kind} id {item.id!r}",
                        item.loc.line,
                        item.loc.col,
                        path,
                    )
                )
            seen.add(item.id)

    check("device", script.roster)
    check("asset", script.assets)
    check("collider", script.colliders)
    check("scene", script.scenes)
    check("cue", [c for s in script.scenes for c in s.cues])
    return diags


def parse_script(document: str, path: str = "<script>") -> ShowScript:
    """Parse a show script from text or JSON.

    Raises :class:`ParseError` with the full diagnostic list on failure;
    on success the returned script is structurally complete (cross-reference
    and invariant checking is ``validate_script``'s job).
    """
    stripped = document.lstrip()
    if stripped.startswith("{"):
        return _parse_json(document, path)
    return _TextParser(path).run(document)


# --- JSON encoding ---------------------------------------------------------


def _jerr(diags: list[Diagnostic], msg: str, path: str) -> None:
    diags.append(Diagnostic(E_SYNTAX, msg, 1, 1, path))


def _jfields(
    obj: dict, allowed: set[str], where: str, diags: list[Diagnostic], path: str
) -> None:
    for key in obj:
        if key not in allowed:
            diags.append(
                Diagnostic(E_UNKNOWN_FIELD, f"unknown field {key!r} in {where}", 1, 1, path)
            )


def _parse_json(document: str, path: str) -> ShowScript:
    diags: list[Diagnostic] = []
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(
            [Diagnostic(E_SYNTAX, f"bad JSON: {exc.msg}", exc.lineno, exc.colno, path)]
        ) from None
    if not isinstance(obj, dict):
        raise ParseError([Diagnostic(E_SYNTAX, "top level must be an object", 1, 1, path)])
    script = script_from_json(obj, diags, path)
    if script is not None:
        diags.extend(duplicate_id_diagnostics(script, path))
        if not script.scenes:
            _jerr(diags, "no scenes declared", path)
    if diags:
        raise ParseError(diags)
    assert script is not None
    return script


def script_from_json(obj: dict, diags: list[Diagnostic], path: str) -> ShowScript | None:
    _jfields(obj, {"title", "roster", "assets", "colliders", "scenes"}, "script", diags, path)

    def vec3(v, where: str) -> tuple[float, float, float]:
        if not (isinstance(v, list) and len(v) == 3):
            _jerr(diags, f"{where} must be a 3-element array", path)
            return (0.0, 0.0, 0.0)
        return (float(v[0]), float(v[1]), float(v[2]))

    roster = []
    for d in obj.get("roster", []):
        _jfields(d, {"id", "role", "label"}, "device", diags, path)
        roster.append(DeviceDecl(str(d.get("id", "")), str(d.get("role", "")), str(d.get("label", ""))))
    assets = []
    for a in obj.get("assets", []):
        _jfields(a, {"id", "kind", "duration_ms", "uri"}, "asset", diags, path)
        assets.append(
            AssetDecl(
                str(a.get("id", "")),
                str(a.get("kind", "")),
                int(a.get("duration_ms", 0)),
                str(a.get("uri", "")),
            )
        )
    colliders = []
    for c in obj.get("colliders", []):
        _jfields(
            c,
            {"id", "shape", "center", "radius", "min", "max", "filter", "hysteresis_m", "debounce_ms"},
            "collider",
            diags,
            path,
        )
        shape_kind = c.get("shape")
        if shape_kind == "sphere":
            shape: SphereShape | BoxShape = SphereShape(
                vec3(c.get("center"), "center"), float(c.get("radius", 0.0))
            )
        elif shape_kind == "box":
            shape = BoxShape(vec3(c.get("min"), "min"), vec3(c.get("max"), "max"))
        else:
            _jerr(diags, f"unknown collider shape {shape_kind!r}", path)
            continue
        colliders.append(
            ColliderDecl(
                str(c.get("id", "")),
                shape,
                subject_filter=str(c.get("filter", SUBJECT_FILTERS[0])),
                hysteresis_m=(None if c.get("hysteresis_m") is None else float(c["hysteresis_m"])),
                debounce_ms=(None if c.get("debounce_ms") is None else int(c["debounce_ms"])),
            )
        )
    scenes = []
    for s in obj.get("scenes", []):
        _jfields(s, {"id", "phase", "cues", "notes"}, "scene", diags, path)
        cues = []
        for cu in s.get("cues", []):
            _jfields(cu, {"id", "blocking", "trigger", "actions", "notes"}, "cue", diags, path)
            trig = _trigger_from_json(cu.get("trigger"), diags, path)
            if trig is None:
                continue
            actions = []
            for act in cu.get("actions", []):
                parsed = _action_from_json(act, diags, path)
                if parsed is not None:
                    actions.append(parsed)
            cues.append(
                Cue(
                    id=str(cu.get("id", "")),
                    trigger=trig,
                    actions=tuple(actions),
                    blocking=bool(cu.get("blocking", False)),
                    notes=tuple(str(x) for x in cu.get("notes", [])),
                )
            )
        phase = str(s.get("phase", PHASE_MAIN))
        if phase not in PHASES:
            diags.append(
                Diagnostic(E_UNKNOWN_FIELD, f"unknown scene phase {phase!r}", 1, 1, path)
            )
            phase = PHASE_MAIN
        scenes.append(
            Scene(
                id=str(s.get("id", "")),
                phase=phase,
                cues=tuple(cues),
                notes=tuple(str(x) for x in s.get("notes", [])),
            )
        )
    return ShowScript(
        title=str(obj.get("title", "")),
        roster=tuple(roster),
        assets=tuple(assets),
        colliders=tuple(colliders),
        scenes=tuple(scenes),
    )


def _trigger_from_json(t, diags: list[Diagnostic], path: str) -> Trigger | None:
    if not isinstance(t, dict):
        _jerr(diags, "cue is missing a trigger object", path)
        return None
    kind = t.get("kind")
    if kind == "manual":
        _jfields(t, {"kind", "device", "button"}, "trigger", diags, path)
        return ManualTrigger(str(t.get("device", "")), str(t.get("button", "")))
    if kind == "auto_after":
        _jfields(t, {"kind", "after", "delay_ms"}, "trigger", diags, path)
        return AutoAfterTrigger(str(t.get("after", "")), int(t.get("delay_ms", 0)))
    if kind == "content_end":
        _jfields(t, {"kind", "after"}, "trigger", diags, path)
        return ContentEndTrigger(str(t.get("after", "")))
    if kind in ("collider_enter", "collider_exit"):
        _jfields(t, {"kind", "collider"}, "trigger", diags, path)
        return ColliderTrigger(str(t.get("collider", "")), kind.removeprefix("collider_"))
    if kind == "operator":
        _jfields(t, {"kind"}, "trigger", diags, path)
        return OperatorTrigger()
    _jerr(diags, f"unknown trigger kind {kind!r}", path)
    return None


def _targets_from_json(v, diags: list[Diagnostic], path: str) -> Targets:
    if v == "all-hmds":
        return Targets.group()
    if isinstance(v, list):
        return Targets.of(*(str(x) for x in v))
    _jerr(diags, f"bad targets {v!r}", path)
    return Targets.of()


def _action_from_json(a, diags: list[Diagnostic], path: str) -> Action | None:
    if not isinstance(a, dict):
        _jerr(diags, "action must be an object", path)
        return None
    kind = a.get("kind")
    if kind == "play":
        _jfields(a, {"kind", "asset", "targets", "start_offset_ms"}, "action", diags, path)
        return PlayMedia(
            str(a.get("asset", "")),
            _targets_from_json(a.get("targets"), diags, path),
            int(a.get("start_offset_ms", 0)),
        )
    if kind == "stop":
        _jfields(a, {"kind", "asset", "targets"}, "action", diags, path)
        return StopMedia(str(a.get("asset", "")), _targets_from_json(a.get("targets"), diags, path))
    if kind == "buzz":
        _jfields(a, {"kind", "device", "pattern"}, "action", diags, path)
        return BuzzAction(str(a.get("device", "")), str(a.get("pattern", "")))
    if kind == "advance_scene":
        _jfields(a, {"kind"}, "action", diags, path)
        return AdvanceScene()
    _jerr(diags, f"unknown action kind {kind!r}", path)
    return None


# --- serialization -----------------------------------------------------------


def _fmt_num(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def _targets_text(t: Targets) -> str:
    return "all-hmds" if t.all_hmds else ",".join(t.devices)


def _trigger_text(t: Trigger) -> str:
    if isinstance(t, ManualTrigger):
        return f"trigger manual {t.device_id} {t.button_id}"
    if isinstance(t, AutoAfterTrigger):
        return f"trigger auto_after {t.predecessor} {t.delay_ms}"
    if isinstance(t, ContentEndTrigger):
        return f"trigger content_end {t.predecessor}"
    if isinstance(t, ColliderTrigger):
        return f"trigger collider_{t.direction} {t.collider_id}"
    return "trigger operator"


def _action_text(a: Action) -> str:
    if isinstance(a, PlayMedia):
        base = f"play {a.asset_id} {_targets_text(a.targets)}"
        return f"{base} {a.start_offset_ms}" if a.start_offset_ms else base
    if isinstance(a, StopMedia):
        return f"stop {a.asset_id} {_targets_text(a.targets)}"
    if isinstance(a, BuzzAction):
        return f"buzz {a.device_id} {a.pattern}"
    return "advance"


def serialize_script(script: ShowScript) -> str:
    """Emit the canonical text form; parses back structurally equal."""
    out: list[str] = []
    if script.title:
        out.append(f'show "{script.title}"')
        out.append("")
    if script.roster:
        out.append("roster:")
        for d in script.roster:
            label = f' "{d.label}"' if d.label else ""
            out.append(f"  {d.role} {d.id}{label}")
        out.append("")
    if script.assets:
        out.append("assets:")
        for a in script.assets:
            out.append(f'  {a.kind} {a.id} {a.duration_ms} "{a.uri}"')
        out.append("")
    if script.colliders:
        out.append("colliders:")
        for c in script.colliders:
            opts = ""
            if c.hysteresis_m is not None:
                opts += f" h={_fmt_num(c.hysteresis_m)}"
            if c.debounce_ms is not None:
                opts += f" debounce={c.debounce_ms}"
            if isinstance(c.shape, SphereShape):
                coords = " ".join(_fmt_num(v) for v in (*c.shape.center, c.shape.radius))
                out.append(f"  sphere {c.id} {coords} {c.subject_filter}{opts}")
            else:
                coords = " ".join(_fmt_num(v) for v in (*c.shape.min, *c.shape.max))
                out.append(f"  box {c.id} {coords} {c.subject_filter}{opts}")
        out.append("")
    for s in script.scenes:
        out.append(f"scene {s.id} {s.phase}:")
        for note in s.notes:
            out.append(f'  note "{note}"')
        for cue in s.cues:
            flag = " blocking" if cue.blocking else ""
            out.append(f"  cue {cue.id}{flag}:")
            out.append(f"    {_trigger_text(cue.trigger)}")
            for note in cue.notes:
                out.append(f'    note "{note}"')
            for action in cue.actions:
                out.append(f"    {_action_text(action)}")
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def _trigger_json(t: Trigger) -> dict:
    if isinstance(t, ManualTrigger):
        return {"kind": "manual", "device": t.device_id, "button": t.button_id}
    if isinstance(t, AutoAfterTrigger):
        return {"kind": "auto_after", "after": t.predecessor, "delay_ms": t.delay_ms}
    if isinstance(t, ContentEndTrigger):
        return {"kind": "content_end", "after": t.predecessor}
    if isinstance(t, ColliderTrigger):
        return {"kind": f"collider_{t.direction}", "collider": t.collider_id}
    return {"kind": "operator"}


def _action_json(a: Action) -> dict:
    def targets(t: Targets):
        return "all-hmds" if t.all_hmds else list(t.devices)

    if isinstance(a, PlayMedia):
        return {
            "kind": "play",
            "asset": a.asset_id,
            "targets": targets(a.targets),
            "start_offset_ms": a.start_offset_ms,
        }
    if isinstance(a, StopMedia):
        return {"kind": "stop", "asset": a.asset_id, "targets": targets(a.targets)}
    if isinstance(a, BuzzAction):
        return {"kind": "buzz", "device": a.device_id, "pattern": a.pattern}
    return {"kind": "advance_scene"}


def script_to_json(script: ShowScript) -> dict:
    """The JSON interchange object for a script."""
    obj: dict = {"title": script.title}
    obj["roster"] = [{"id": d.id, "role": d.role, "label": d.label} for d in script.roster]
    obj["assets"] = [
        {"id": a.id, "kind": a.kind, "duration_ms": a.duration_ms, "uri": a.uri}
        for a in script.assets
    ]
    colliders = []
    for c in script.colliders:
        entry: dict = {"id": c.id, "filter": c.subject_filter}
        if isinstance(c.shape, SphereShape):
            entry.update(shape="sphere", center=list(c.shape.center), radius=c.shape.radius)
        else:
            entry.update(shape="box", min=list(c.shape.min), max=list(c.shape.max))
        if c.hysteresis_m is not None:
            entry["hysteresis_m"] = c.hysteresis_m
        if c.debounce_ms is not None:
            entry["debounce_ms"] = c.debounce_ms
        colliders.append(entry)
    obj["colliders"] = colliders
    obj["scenes"] = [
        {
            "id": s.id,
            "phase": s.phase,
            "notes": list(s.notes),
            "cues": [
                {
                    "id": c.id,
                    "blocking": c.blocking,
                    "notes": list(c.notes),
                    "trigger": _trigger_json(c.trigger),
                    "actions": [_action_json(a) for a in c.actions],
                }
                for c in s.cues
            ],
        }
        for s in script.scenes
    ]
    return obj
