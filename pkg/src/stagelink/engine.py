"""Deterministic cue timeline engine.

The engine is an event-driven state machine folded over a totally ordered
event stream.  Time is integer milliseconds of the server clock; the engine
never reads a wall clock, so a recorded event stream replays to an identical
command stream, byte for byte.

Conventions:

* operations take the state and return ``(state, commands)``; the state
  object is mutated and returned (callers must not keep using a stale
  reference, which the pure-looking signature would otherwise invite).
* every side effect (command, lifecycle transition, ignored event, media
  timeout) is also appended to ``state.journal`` in emission order, which is
  what the run log writer drains.
* command causes: the seq of the triggering event, a timer id string
  ``"timer:<cue>@<fire_at>"`` / ``"timeout:<cue>@<fire_at>"``, or ``"op"``
  for a direct operator_command call.

Stopping media that a *different* blocking cue is waiting on does not
resolve that cue's pending set; the media-timeout grace recovers it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .compiler import resolve_targets
from .model import (
    ROLE_HMD,
    AdvanceScene,
    BuzzAction,
    ColliderTrigger,
    CueGraph,
    ManualTrigger,
    PlayMedia,
    StopMedia,
)

# cue lifecycle
ST_IDLE = "idle"
ST_ARMED = "armed"
ST_RUNNING = "running"
ST_COMPLETED = "completed"
ST_SKIPPED = "skipped"
RESOLVED = (ST_COMPLETED, ST_SKIPPED)

# event kinds
EV_BUTTON = "button"
EV_MEDIA_ENDED = "media_ended"
EV_COLLIDER = "collider"
EV_JOINED = "device_joined"
EV_LEFT = "device_left"
EV_OP = "operator_cmd"
EV_RUN_END = "run_end"

# command kinds
CMD_START_MEDIA = "start_media"
CMD_STOP_MEDIA = "stop_media"
CMD_BUZZ = "buzz"
CMD_SNAPSHOT = "snapshot"

# operator command kinds
OP_FIRE = "fire"
OP_SKIP = "skip"
OP_HOLD = "hold"
OP_RESUME = "resume"
OP_JUMP = "jump"

E_EMPTY_GRAPH = "E_EMPTY_GRAPH"
E_STALE_SEQ = "E_STALE_SEQ"
E_UNKNOWN_CUE = "E_UNKNOWN_CUE"
E_UNKNOWN_SCENE = "E_UNKNOWN_SCENE"
E_ALREADY_COMPLETED = "E_ALREADY_COMPLETED"
E_UNKNOWN_DEVICE = "E_UNKNOWN_DEVICE"


class EngineError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class EngineConfig:
    lead_ms: int = 150  # StartMedia start_at = issued_at + lead_ms
    grace_ms: int = 2000  # media force-complete = declared end + grace


@dataclass(frozen=True)
class OperatorCmd:
    kind: str  # fire | skip | hold | resume | jump
    cue_id: str = ""
    scene_id: str = ""


@dataclass(frozen=True)
class Event:
    """One entry of the engine's totally ordered input stream."""

    seq: int
    at: int  # server clock, ms
    kind: str
    device: str = ""
    button: str = ""
    asset: str = ""
    cue: str = ""  # media_ended: cue the media belonged to
    collider: str = ""
    direction: str = ""  # collider: enter | exit
    cmd: OperatorCmd | None = None


@dataclass(frozen=True)
class SnapshotMedia:
    cue: str
    asset: str
    seek_offset_ms: int


@dataclass(frozen=True)
class SnapshotPayload:
    scene_id: str
    media: tuple[SnapshotMedia, ...]

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "media": [
                {"cue": m.cue, "asset": m.asset, "seek_offset_ms": m.seek_offset_ms}
                for m in self.media
            ],
        }


@dataclass(frozen=True)
class Command:
    seq: int
    kind: str
    issued_at: int
    cause: int | str
    cue: str = ""  # firing cue, when there is one
    asset: str = ""
    targets: tuple[str, ...] = ()
    start_at: int = 0
    seek_offset_ms: int = 0
    device: str = ""
    pattern: str = ""
    payload: SnapshotPayload | None = None

    def to_dict(self) -> dict:
        d: dict = {
            "rec": "command",
            "seq": self.seq,
            "kind": self.kind,
            "issued_at": self.issued_at,
            "cause": self.cause,
        }
        if self.cue:
            d["cue"] = self.cue
        if self.kind in (CMD_START_MEDIA, CMD_STOP_MEDIA):
            d["asset"] = self.asset
            d["targets"] = list(self.targets)
        if self.kind == CMD_START_MEDIA:
            d["start_at"] = self.start_at
            d["seek_offset_ms"] = self.seek_offset_ms
        if self.kind == CMD_BUZZ:
            d["device"] = self.device
            d["pattern"] = self.pattern
        if self.kind == CMD_SNAPSHOT:
            d["device"] = self.device
            d["payload"] = self.payload.to_dict() if self.payload else None
        return d


@dataclass(frozen=True)
class _MediaRun:
    asset: str
    targets: tuple[str, ...]
    start_at: int
    seek_offset_ms: int
    remaining_ms: int


@dataclass(frozen=True)
class _Timer:
    fire_at: int
    cue: str
    kind: str  # "auto" | "timeout"

    @property
    def timer_id(self) -> str:
        prefix = "timer" if self.kind == "auto" else "timeout"
        return f"{prefix}:{self.cue}@{self.fire_at}"


@dataclass
class EngineState:
    graph: CueGraph
    config: EngineConfig
    current_scene: int = 0
    cue_states: dict[str, str] = field(default_factory=dict)
    media_pending: dict[str, set[tuple[str, str]]] = field(default_factory=dict)
    media_runs: dict[str, tuple[_MediaRun, ...]] = field(default_factory=dict)
    timers: list[_Timer] = field(default_factory=list)
    held: bool = False
    deferred: list[dict] = field(default_factory=list)
    logical_now: int = 0
    last_seq: int = 0
    cmd_seq: int = 0
    ended: bool = False
    connected: set[str] = field(default_factory=set)
    devices_ever: set[str] = field(default_factory=set)
    journal: list = field(default_factory=list)  # dict records and Commands

    def drain_journal(self) -> list:
        out = self.journal
        self.journal = []
        return out

    def scene(self):
        return self.graph.scenes[self.current_scene]


# --- small helpers ----------------------------------------------------------


def _record(state: EngineState, rec: dict) -> None:
    state.journal.append(rec)


def _transition(state: EngineState, cue_id: str, to: str, at: int, cause) -> None:
    frm = state.cue_states[cue_id]
    state.cue_states[cue_id] = to
    _record(
        state,
        {"rec": "transition", "cue": cue_id, "from": frm, "to": to, "at": at, "cause": cause},
    )


def _ignored(state: EngineState, at: int, reason: str, seq: int | None = None) -> None:
    rec = {"rec": "ignored", "at": at, "reason": reason}
    if seq is not None:
        rec["seq"] = seq
    _record(state, rec)


def _emit(state: EngineState, out: list[Command], cmd: Command) -> None:
    out.append(cmd)
    state.journal.append(cmd)


def _next_cmd_seq(state: EngineState) -> int:
    state.cmd_seq += 1
    return state.cmd_seq


def _schedule(state: EngineState, fire_at: int, cue: str, kind: str) -> None:
    state.timers.append(_Timer(fire_at, cue, kind))


def _cancel_timers(state: EngineState, cue: str, kind: str | None = None) -> None:
    state.timers = [
        t for t in state.timers if not (t.cue == cue and (kind is None or t.kind == kind))
    ]


# --- scene entry -----------------------------------------------------------


def _enter_scene(state: EngineState, index: int, at: int, cause, out: list[Command]) -> None:
    scene = state.graph.scenes[index]
    state.current_scene = index
    # Arm, in topological order, every idle cue whose dependencies are
    # already resolved (normally just the roots; after operator skips a
    # successor may be immediately armable too).
    for cid in scene.topo_order:
        node = state.graph.nodes[cid]
        if state.cue_states[cid] != ST_IDLE:
            continue
        pred = node.predecessor
        if pred is None or state.cue_states.get(pred) in RESOLVED:
            _transition(state, cid, ST_ARMED, at, cause)
            if pred is not None:
                # auto_after cue whose predecessor was resolved before the
                # scene opened; its delay counts from scene entry.
                t = node.cue.trigger
                delay = getattr(t, "delay_ms", None)
                if delay is not None:
                    _schedule(state, at + delay, cid, "auto")
    for cid, delay in scene.scene_start_timers:
        if state.cue_states[cid] == ST_ARMED:
            _schedule(state, at + delay, cid, "auto")


def _close_scene(state: EngineState, at: int, cause, out: list[Command]) -> None:
    scene = state.scene()
    for node in scene.cues:
        if state.cue_states[node.id] not in RESOLVED:
            _skip_cue(state, node.id, at, cause, out)
    live = {node.id for node in scene.cues}
    state.timers = [t for t in state.timers if t.cue not in live]


# --- firing, completion, skipping --------------------------------------------


def _fire_cue(state: EngineState, cue_id: str, at: int, cause, out: list[Command]) -> None:
    node = state.graph.nodes[cue_id]
    _transition(state, cue_id, ST_RUNNING, at, cause)

    runs: list[_MediaRun] = []
    advance = False
    for action in node.cue.actions:
        if isinstance(action, PlayMedia):
            targets = resolve_targets(action.targets, state.graph.script)
            start_at = at + state.config.lead_ms
            asset = state.graph.assets.get(action.asset_id)
            duration = asset.duration_ms if asset else 0
            remaining = max(duration - action.start_offset_ms, 0)
            _emit(
                state,
                out,
                Command(
                    seq=_next_cmd_seq(state),
                    kind=CMD_START_MEDIA,
                    issued_at=at,
                    cause=cause,
                    cue=cue_id,
                    asset=action.asset_id,
                    targets=targets,
                    start_at=start_at,
                    seek_offset_ms=action.start_offset_ms,
                ),
            )
            runs.append(
                _MediaRun(action.asset_id, targets, start_at, action.start_offset_ms, remaining)
            )
        elif isinstance(action, StopMedia):
            _emit(
                state,
                out,
                Command(
                    seq=_next_cmd_seq(state),
                    kind=CMD_STOP_MEDIA,
                    issued_at=at,
                    cause=cause,
                    cue=cue_id,
                    asset=action.asset_id,
                    targets=resolve_targets(action.targets, state.graph.script),
                ),
            )
        elif isinstance(action, BuzzAction):
            _emit(
                state,
                out,
                Command(
                    seq=_next_cmd_seq(state),
                    kind=CMD_BUZZ,
                    issued_at=at,
                    cause=cause,
                    cue=cue_id,
                    device=action.device_id,
                    pattern=action.pattern,
                ),
            )
        elif isinstance(action, AdvanceScene):
            advance = True

    blocking_waits = node.cue.blocking and node.media_set
    if blocking_waits:
        state.media_pending[cue_id] = set(node.media_set)
        state.media_runs[cue_id] = tuple(runs)
        deadline = max(r.start_at + r.remaining_ms for r in runs) + state.config.grace_ms
        # "exceeded" is strict: force-complete on the first ms past the deadline
        _schedule(state, deadline + 1, cue_id, "timeout")
    else:
        _complete_cue(state, cue_id, at, cause, out, fire_content_end=True)

    if advance:
        _advance_to_scene(state, state.current_scene + 1, at, cause, out)


def _complete_cue(
    state: EngineState, cue_id: str, at: int, cause, out: list[Command], fire_content_end: bool
) -> None:
    node = state.graph.nodes[cue_id]
    _transition(state, cue_id, ST_COMPLETED, at, cause)
    state.media_pending.pop(cue_id, None)
    state.media_runs.pop(cue_id, None)
    _cancel_timers(state, cue_id, "timeout")
    _arm_successors(state, node, at, cause, out, fire_content_end)


def _skip_cue(state: EngineState, cue_id: str, at: int, cause, out: list[Command]) -> None:
    node = state.graph.nodes[cue_id]
    was_running = state.cue_states[cue_id] == ST_RUNNING
    _transition(state, cue_id, ST_SKIPPED, at, cause)
    if was_running:
        pending = state.media_pending.pop(cue_id, set())
        state.media_runs.pop(cue_id, None)
        _cancel_timers(state, cue_id, "timeout")
        by_asset: dict[str, list[str]] = {}
        for device, asset in sorted(pending):
            by_asset.setdefault(asset, []).append(device)
        for asset in sorted(by_asset):
            _emit(
                state,
                out,
                Command(
                    seq=_next_cmd_seq(state),
                    kind=CMD_STOP_MEDIA,
                    issued_at=at,
                    cause=cause,
                    cue=cue_id,
                    asset=asset,
                    targets=tuple(by_asset[asset]),
                ),
            )
    _arm_successors(state, node, at, cause, out, fire_content_end=False)


def _arm_successors(
    state, node, at: int, cause, out: list[Command], fire_content_end: bool
) -> None:
    if node.scene_index != state.current_scene:
        return
    for succ, delay in node.auto_successors:
        if state.cue_states[succ] == ST_IDLE:
            _transition(state, succ, ST_ARMED, at, cause)
            _schedule(state, at + delay, succ, "auto")
    for succ in node.content_end_successors:
        if state.cue_states[succ] == ST_IDLE:
            _transition(state, succ, ST_ARMED, at, cause)
        if fire_content_end and state.cue_states[succ] == ST_ARMED:
            if state.held:
                state.deferred.append({"kind": "content_end", "cue": succ, "cause": cause})
            else:
                _fire_cue(state, succ, at, cause, out)


def _advance_to_scene(state: EngineState, index: int, at: int, cause, out: list[Command]) -> None:
    from_id = state.scene().id
    _close_scene(state, at, cause, out)
    if index >= len(state.graph.scenes):
        state.ended = True
        _record(state, {"rec": "show_end", "at": at, "cause": cause})
        return
    _record(
        state,
        {
            "rec": "scene",
            "at": at,
            "from_scene": from_id,
            "to_scene": state.graph.scenes[index].id,
            "cause": cause,
        },
    )
    _enter_scene(state, index, at, cause, out)


# --- timers --------------------------------------------------------------


def _due_timers(state: EngineState, now: int) -> _Timer | None:
    due = [t for t in state.timers if t.fire_at <= now]
    if not due:
        return None
    return min(due, key=lambda t: (t.fire_at, t.cue, t.kind))


def _advance_timers(state: EngineState, now: int, out: list[Command]) -> None:
    """Fire every due timer in (fire_at, cue id) order, then advance the clock."""
    if state.held:
        state.logical_now = max(state.logical_now, now)
        return
    while (timer := _due_timers(state, now)) is not None:
        state.timers.remove(timer)
        at = max(timer.fire_at, state.logical_now)
        state.logical_now = at
        cue_state = state.cue_states.get(timer.cue)
        if timer.kind == "auto":
            if cue_state == ST_ARMED and state.graph.nodes[timer.cue].scene_index == state.current_scene:
                _fire_cue(state, timer.cue, at, timer.timer_id, out)
            else:
                _ignored(state, at, f"timer for cue {timer.cue!r} in state {cue_state}")
        else:  # timeout
            pending = state.media_pending.get(timer.cue)
            if cue_state == ST_RUNNING and pending:
                _record(
                    state,
                    {
                        "rec": "timeout",
                        "cue": timer.cue,
                        "at": at,
                        "pending": sorted(list(p) for p in pending),
                        "cause": timer.timer_id,
                    },
                )
                state.media_pending[timer.cue] = set()
                _complete_cue(state, timer.cue, at, timer.timer_id, out, fire_content_end=True)
    state.logical_now = max(state.logical_now, now)


# --- public operations ---------------------------------------------------


def init_engine(
    graph: CueGraph, start_at: int, config: EngineConfig | None = None
) -> tuple[EngineState, list[Command]]:
    if not graph.scenes:
        raise EngineError(E_EMPTY_GRAPH, "graph has no scenes")
    state = EngineState(
        graph=graph,
        config=config or EngineConfig(),
        cue_states={cid: ST_IDLE for cid in graph.nodes},
        logical_now=start_at,
    )
    out: list[Command] = []
    _enter_scene(state, 0, start_at, "init", out)
    _advance_timers(state, start_at, out)
    return state, out


def handle_event(state: EngineState, event: Event) -> tuple[EngineState, list[Command]]:
    if event.seq <= state.last_seq:
        raise EngineError(
            E_STALE_SEQ, f"event seq {event.seq} not after {state.last_seq}"
        )
    state.last_seq = event.seq
    out: list[Command] = []
    at = max(event.at, state.logical_now)
    _advance_timers(state, at, out)
    state.logical_now = at

    if event.kind == EV_BUTTON:
        _on_button(state, event, at, out)
    elif event.kind == EV_COLLIDER:
        _on_collider(state, event, at, out)
    elif event.kind == EV_MEDIA_ENDED:
        _on_media_ended(state, event, at, out)
    elif event.kind == EV_JOINED:
        _on_joined(state, event, at, out)
    elif event.kind == EV_LEFT:
        state.connected.discard(event.device)
    elif event.kind == EV_OP:
        if event.cmd is None:
            _ignored(state, at, "operator_cmd event without a command", event.seq)
        else:
            _operator(state, event.cmd, at, event.seq, out, strict=False)
    elif event.kind == EV_RUN_END:
        pass  # pure time advance; the pre-tick above already ran the timers
    else:
        _ignored(state, at, f"unknown event kind {event.kind!r}", event.seq)
    return state, out


def tick(state: EngineState, now: int) -> tuple[EngineState, list[Command]]:
    out: list[Command] = []
    if now < state.logical_now:
        return state, out
    _advance_timers(state, now, out)
    return state, out


def operator_command(state: EngineState, cmd: OperatorCmd) -> tuple[EngineState, list[Command]]:
    out: list[Command] = []
    _operator(state, cmd, state.logical_now, "op", out, strict=True)
    return state, out


def snapshot(state: EngineState, device_id: str) -> SnapshotPayload:
    if state.graph.script.device(device_id) is None:
        raise EngineError(E_UNKNOWN_DEVICE, f"device {device_id!r} not in roster")
    media: list[SnapshotMedia] = []
    for cid in sorted(state.media_runs):
        if state.cue_states.get(cid) != ST_RUNNING:
            continue
        for run in state.media_runs[cid]:
            if device_id not in run.targets:
                continue
            elapsed = max(state.logical_now - run.start_at, 0)
            media.append(SnapshotMedia(cid, run.asset, run.seek_offset_ms + elapsed))
    return SnapshotPayload(scene_id=state.scene().id, media=tuple(media))


def replay(
    graph: CueGraph,
    events: list[Event],
    start_at: int = 0,
    config: EngineConfig | None = None,
) -> list[Command]:
    """Fold the event log through a fresh engine; returns every command."""
    state, commands = init_engine(graph, start_at, config)
    for event in events:
        state, out = handle_event(state, event)
        commands.extend(out)
    return commands


# --- event handlers -------------------------------------------------------


def _matching_armed(state: EngineState, match) -> list[str]:
    scene = state.scene()
    return [
        cid
        for cid in scene.topo_order
        if state.cue_states[cid] == ST_ARMED and match(state.graph.nodes[cid].cue.trigger)
    ]


def _on_button(state: EngineState, event: Event, at: int, out: list[Command]) -> None:
    if state.graph.script.device(event.device) is None:
        _ignored(state, at, f"button from unknown device {event.device!r}", event.seq)
        return
    hits = _matching_armed(
        state,
        lambda t: isinstance(t, ManualTrigger)
        and t.device_id == event.device
        and t.button_id == event.button,
    )
    if not hits:
        _ignored(
            state,
            at,
            f"no armed cue for button {event.button!r} on {event.device!r}",
            event.seq,
        )
        return
    if state.held:
        state.deferred.append({"kind": "event", "event": event})
        return
    for cid in hits:
        if state.cue_states[cid] == ST_ARMED:  # an earlier hit may have advanced the scene
            _fire_cue(state, cid, at, event.seq, out)


def _on_collider(state: EngineState, event: Event, at: int, out: list[Command]) -> None:
    hits = _matching_armed(
        state,
        lambda t: isinstance(t, ColliderTrigger)
        and t.collider_id == event.collider
        and t.direction == event.direction,
    )
    if not hits:
        _ignored(
            state,
            at,
            f"no armed cue for collider {event.collider!r} {event.direction}",
            event.seq,
        )
        return
    if state.held:
        state.deferred.append({"kind": "event", "event": event})
        return
    for cid in hits:
        if state.cue_states[cid] == ST_ARMED:
            _fire_cue(state, cid, at, event.seq, out)


def _on_media_ended(state: EngineState, event: Event, at: int, out: list[Command]) -> None:
    pair = (event.device, event.asset)
    candidates = [event.cue] if event.cue else sorted(state.media_pending)
    for cid in candidates:
        pending = state.media_pending.get(cid)
        if pending is not None and pair in pending:
            pending.remove(pair)
            if not pending:
                _complete_cue(state, cid, at, event.seq, out, fire_content_end=True)
            return
    _ignored(
        state,
        at,
        f"media_ended {event.asset!r} on {event.device!r} matches no pending cue",
        event.seq,
    )


def _on_joined(state: EngineState, event: Event, at: int, out: list[Command]) -> None:
    decl = state.graph.script.device(event.device)
    if decl is None:
        _ignored(state, at, f"join from unknown device {event.device!r}", event.seq)
        return
    rejoin = event.device in state.devices_ever
    state.devices_ever.add(event.device)
    state.connected.add(event.device)
    if rejoin and decl.role == ROLE_HMD:
        _emit(
            state,
            out,
            Command(
                seq=_next_cmd_seq(state),
                kind=CMD_SNAPSHOT,
                issued_at=at,
                cause=event.seq,
                device=event.device,
                payload=snapshot(state, event.device),
            ),
        )


# --- operator commands -----------------------------------------------------


def _op_problem(state: EngineState, code: str, msg: str, at: int, cause, strict: bool) -> None:
    if strict:
        raise EngineError(code, msg)
    _ignored(state, at, f"{code}: {msg}", cause if isinstance(cause, int) else None)


def _operator(
    state: EngineState, cmd: OperatorCmd, at: int, cause, out: list[Command], strict: bool
) -> None:
    if cmd.kind == OP_HOLD:
        if not state.held:
            state.held = True
            _record(state, {"rec": "hold", "at": at, "on": True, "cause": cause})
        return
    if cmd.kind == OP_RESUME:
        if state.held:
            _resume(state, at, cause, out)
        return
    if cmd.kind == OP_JUMP:
        scene = state.graph.scene_by_id(cmd.scene_id)
        if scene is None:
            _op_problem(state, E_UNKNOWN_SCENE, f"unknown scene {cmd.scene_id!r}", at, cause, strict)
            return
        _advance_to_scene(state, scene.index, at, cause, out)
        return

    # fire / skip
    node = state.graph.nodes.get(cmd.cue_id)
    if node is None:
        _op_problem(state, E_UNKNOWN_CUE, f"unknown cue {cmd.cue_id!r}", at, cause, strict)
        return
    st = state.cue_states[cmd.cue_id]
    if cmd.kind == OP_FIRE:
        if node.scene_index != state.current_scene:
            _op_problem(
                state,
                E_UNKNOWN_CUE,
                f"cue {cmd.cue_id!r} is not in the current scene",
                at,
                cause,
                strict,
            )
            return
        if st not in (ST_ARMED, ST_IDLE):
            _op_problem(
                state,
                E_ALREADY_COMPLETED,
                f"cue {cmd.cue_id!r} is {st}, cannot fire",
                at,
                cause,
                strict,
            )
            return
        if st == ST_IDLE:
            _skip_unmet_predecessors(state, cmd.cue_id, at, cause, out)
        _fire_cue(state, cmd.cue_id, at, cause, out)
        return
    if cmd.kind == OP_SKIP:
        if st == ST_COMPLETED:
            _op_problem(
                state,
                E_ALREADY_COMPLETED,
                f"cue {cmd.cue_id!r} is completed, cannot skip",
                at,
                cause,
                strict,
            )
            return
        if st != ST_SKIPPED:
            _skip_cue(state, cmd.cue_id, at, cause, out)
        return
    _op_problem(state, E_UNKNOWN_CUE, f"unknown operator command {cmd.kind!r}", at, cause, strict)


def _skip_unmet_predecessors(state: EngineState, cue_id: str, at: int, cause, out) -> None:
    chain: list[str] = []
    node = state.graph.nodes[cue_id]
    pred = node.predecessor
    while pred is not None and state.cue_states[pred] not in RESOLVED:
        chain.append(pred)
        pred = state.graph.nodes[pred].predecessor
    for cid in reversed(chain):
        if state.cue_states[cid] not in RESOLVED:
            _skip_cue(state, cid, at, cause, out)


def _resume(state: EngineState, at: int, cause, out: list[Command]) -> None:
    state.held = False
    _record(state, {"rec": "hold", "at": at, "on": False, "cause": cause})
    # Overdue timers fire at the resume instant, not in the frozen past.
    state.timers = [
        replace(t, fire_at=max(t.fire_at, at)) for t in state.timers
    ]
    deferred = state.deferred
    state.deferred = []
    for entry in deferred:
        if entry["kind"] == "content_end":
            cid = entry["cue"]
            if state.cue_states.get(cid) == ST_ARMED:
                _fire_cue(state, cid, at, entry["cause"], out)
            else:
                _ignored(state, at, f"deferred fire for cue {cid!r} no longer armed")
        else:
            ev: Event = entry["event"]
            stale = replace(ev, at=at)
            if ev.kind == EV_BUTTON:
                _on_button(state, stale, at, out)
            else:
                _on_collider(state, stale, at, out)
    _advance_timers(state, at, out)


# --- introspection ----------------------------------------------------------


def state_summary(state: EngineState) -> dict:
    """JSON-shaped view of the engine for operator consoles."""
    scenes = []
    for cs in state.graph.scenes:
        scenes.append(
            {
                "id": cs.id,
                "phase": cs.phase,
                "current": cs.index == state.current_scene,
                "cues": [
                    {
                        "id": node.id,
                        "state": state.cue_states[node.id],
                        "blocking": node.cue.blocking,
                        "trigger": type(node.cue.trigger).__name__,
                        "pending": sorted(
                            list(p) for p in state.media_pending.get(node.id, ())
                        ),
                    }
                    for node in cs.cues
                ],
            }
        )
    return {
        "title": state.graph.script.title,
        "scene_id": state.scene().id,
        "held": state.held,
        "ended": state.ended,
        "logical_now": state.logical_now,
        "last_seq": state.last_seq,
        "scenes": scenes,
    }
