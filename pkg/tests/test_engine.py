"""Engine lifecycle walkthroughs with hand-computed timings.

Each scenario's expected values are worked out in comments next to the
asserts; nothing here is copied from engine output.
"""

from __future__ import annotations

import pytest

from conftest import build_show
from stagelink.engine import (
    CMD_BUZZ,
    CMD_SNAPSHOT,
    CMD_START_MEDIA,
    CMD_STOP_MEDIA,
    E_ALREADY_COMPLETED,
    E_EMPTY_GRAPH,
    E_STALE_SEQ,
    E_UNKNOWN_CUE,
    E_UNKNOWN_DEVICE,
    E_UNKNOWN_SCENE,
    EV_BUTTON,
    EV_JOINED,
    EV_LEFT,
    EV_MEDIA_ENDED,
    EV_OP,
    EV_RUN_END,
    OP_FIRE,
    OP_HOLD,
    OP_JUMP,
    OP_RESUME,
    OP_SKIP,
    ST_ARMED,
    ST_COMPLETED,
    ST_IDLE,
    ST_RUNNING,
    ST_SKIPPED,
    EngineConfig,
    EngineError,
    Event,
    OperatorCmd,
    handle_event,
    init_engine,
    operator_command,
    replay,
    snapshot,
    state_summary,
    tick,
)
from stagelink.model import ShowScript

SHOW = '''\
show "Engine Fixture"
roster:
  hmd h1
  hmd h2
  wearable w1
assets:
  audio intro 5000 "media/intro.ogg"
  audio loop 10000 "media/loop.ogg"
colliders:
  sphere door 0 0 0 1.5
scene one:
  cue start blocking:
    trigger manual w1 go
    play intro all-hmds
  cue haptic:
    trigger content_end start
    buzz w1 double
  cue late:
    trigger auto_after start 1000
    buzz w1 short
  cue door_in:
    trigger collider_enter door
    buzz w1 long
  cue leave:
    trigger operator
    advance
scene two:
  cue arrive:
    trigger auto_after scene-start 500
    buzz w1 short
  cue second blocking:
    trigger manual w1 go
    play loop h1
  cue finish:
    trigger operator
    advance
'''


def fresh(config: EngineConfig | None = None):
    _, graph = build_show(SHOW)
    return init_engine(graph, 0, config)


def ev(seq, at, kind, **kw):
    return Event(seq=seq, at=at, kind=kind, **kw)


def button(seq, at, device="w1", btn="go"):
    return ev(seq, at, EV_BUTTON, device=device, button=btn)


def media_ended(seq, at, device, asset="intro", cue=""):
    return ev(seq, at, EV_MEDIA_ENDED, device=device, asset=asset, cue=cue)


def op(seq, at, kind, cue_id="", scene_id=""):
    return ev(seq, at, EV_OP, cmd=OperatorCmd(kind, cue_id=cue_id, scene_id=scene_id))


# --- arming at scene entry --------------------------------------------------


def test_init_arms_roots_only():
    state, out = fresh()
    assert out == []
    assert state.cue_states["start"] == ST_ARMED
    assert state.cue_states["door_in"] == ST_ARMED
    assert state.cue_states["leave"] == ST_ARMED
    assert state.cue_states["haptic"] == ST_IDLE
    assert state.cue_states["late"] == ST_IDLE
    # next scene untouched
    assert state.cue_states["arrive"] == ST_IDLE
    assert state.cue_states["second"] == ST_IDLE


def test_init_rejects_empty_graph():
    from stagelink.compiler import compile_timeline

    graph = compile_timeline(ShowScript(title="x"))
    with pytest.raises(EngineError) as err:
        init_engine(graph, 0)
    assert err.value.code == E_EMPTY_GRAPH


# --- manual fire and blocking completion -------------------------------------


def test_button_fires_start_media():
    state, _ = fresh()
    state, out = handle_event(state, button(1, 1000))
    assert len(out) == 1
    cmd = out[0]
    assert cmd.kind == CMD_START_MEDIA
    assert cmd.seq == 1
    assert cmd.issued_at == 1000
    assert cmd.start_at == 1150  # issued_at + default lead 150
    assert cmd.seek_offset_ms == 0
    assert cmd.targets == ("h1", "h2")  # all-hmds, roster order
    assert cmd.cue == "start"
    assert cmd.cause == 1
    assert state.cue_states["start"] == ST_RUNNING
    assert state.media_pending["start"] == {("h1", "intro"), ("h2", "intro")}
    # timeout deadline: start_at 1150 + duration 5000 + grace 2000 = 8150,
    # strict "exceeded" puts the force-complete timer at 8151
    assert [(t.fire_at, t.kind) for t in state.timers] == [(8151, "timeout")]
    # auto_after counts from the predecessor resolving, so late is untouched
    # while start is still running
    assert state.cue_states["late"] == ST_IDLE


def test_partial_media_ended_keeps_cue_running():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    state, out = handle_event(state, media_ended(2, 5000, "h1"))
    assert out == []
    assert state.cue_states["start"] == ST_RUNNING
    assert state.media_pending["start"] == {("h2", "intro")}


def test_last_media_ended_completes_and_chains():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    state, _ = handle_event(state, media_ended(2, 5000, "h1"))
    state, out = handle_event(state, media_ended(3, 5200, "h2"))
    assert state.cue_states["start"] == ST_COMPLETED
    assert state.cue_states["haptic"] == ST_COMPLETED  # content_end fired same instant
    assert [(c.kind, c.cue, c.issued_at, c.cause) for c in out] == [
        (CMD_BUZZ, "haptic", 5200, 3)
    ]
    # timeout timer cancelled; auto successor armed, delay from completion
    assert [(t.cue, t.fire_at, t.kind) for t in state.timers] == [("late", 6200, "auto")]
    assert state.cue_states["late"] == ST_ARMED


def test_media_ended_with_cue_hint():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    state, _ = handle_event(state, media_ended(2, 4000, "h1", cue="start"))
    assert state.media_pending["start"] == {("h2", "intro")}


def test_unmatched_media_ended_ignored():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    state.drain_journal()
    state, out = handle_event(state, media_ended(2, 4000, "h1", asset="loop"))
    assert out == []
    assert state.media_pending["start"] == {("h1", "intro"), ("h2", "intro")}
    assert any(r.get("rec") == "ignored" for r in state.drain_journal() if isinstance(r, dict))


def test_unknown_device_button_ignored():
    state, _ = fresh()
    state, out = handle_event(state, button(1, 10, device="nobody"))
    assert out == []
    assert state.cue_states["start"] == ST_ARMED


def test_button_with_no_armed_cue_ignored():
    state, _ = fresh()
    state, out = handle_event(state, button(1, 10, btn="unknown-button"))
    assert out == []


# --- media timeout -----------------------------------------------------------


def test_timeout_force_completes_after_grace():
    # lead 0: start_at = 0, declared end = 5000, grace 2000 -> deadline 7000,
    # force-complete on the first ms past it: 7001.
    state, _ = fresh(EngineConfig(lead_ms=0, grace_ms=2000))
    state, _ = handle_event(state, button(1, 0))
    state, out = tick(state, 7000)
    assert out == []
    assert state.cue_states["start"] == ST_RUNNING
    state.drain_journal()
    state, out = tick(state, 7001)
    assert state.cue_states["start"] == ST_COMPLETED
    # content_end successor fires off the timeout
    assert [(c.kind, c.cue, c.issued_at, c.cause) for c in out] == [
        (CMD_BUZZ, "haptic", 7001, "timeout:start@7001")
    ]
    recs = [r for r in state.drain_journal() if isinstance(r, dict)]
    timeouts = [r for r in recs if r.get("rec") == "timeout"]
    assert len(timeouts) == 1
    assert timeouts[0]["cue"] == "start"
    assert timeouts[0]["at"] == 7001
    assert timeouts[0]["pending"] == [["h1", "intro"], ["h2", "intro"]]


def test_timeout_not_early():
    state, _ = fresh(EngineConfig(lead_ms=0, grace_ms=2000))
    state, _ = handle_event(state, button(1, 0))
    state, _ = handle_event(state, media_ended(2, 4800, "h1"))
    state, out = tick(state, 7001)
    # one report arrived; the deadline still forces the rest
    assert state.cue_states["start"] == ST_COMPLETED


# --- hold / resume -----------------------------------------------------------


def test_hold_defers_buttons_but_not_media_bookkeeping():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    state, _ = handle_event(state, op(2, 1500, OP_HOLD))
    assert state.held

    # button while held: recognized, deferred, no commands
    state, out = handle_event(state, button(3, 3000, btn="go"))
    assert out == []  # start is running, door_in untouched; nothing armed matches w1/go
    state, out = handle_event(
        state, ev(4, 3100, "collider", collider="door", direction="enter")
    )
    assert out == []
    assert state.cue_states["door_in"] == ST_ARMED

    # media reports keep counting down while held
    state, _ = handle_event(state, media_ended(5, 5000, "h1"))
    state, out = handle_event(state, media_ended(6, 5200, "h2"))
    assert state.cue_states["start"] == ST_COMPLETED
    assert out == []  # content_end fire deferred
    assert state.cue_states["haptic"] == ST_ARMED

    # resume replays deferred work at the resume instant with original causes
    state, out = handle_event(state, op(7, 6000, OP_RESUME))
    assert not state.held
    got = [(c.kind, c.cue, c.issued_at, c.cause) for c in out]
    assert got == [
        (CMD_BUZZ, "door_in", 6000, 4),
        (CMD_BUZZ, "haptic", 6000, 6),
    ]
    # late armed at start's completion (5200) with delay 1000; its timer
    # outlives the hold and fires on its own schedule
    state, out = tick(state, 6200)
    assert [(c.kind, c.cue, c.issued_at, c.cause) for c in out] == [
        (CMD_BUZZ, "late", 6200, "timer:late@6200")
    ]


def test_hold_is_idempotent():
    state, _ = fresh()
    state, _ = handle_event(state, op(1, 100, OP_HOLD))
    state.drain_journal()
    state, _ = handle_event(state, op(2, 200, OP_HOLD))
    recs = [r for r in state.drain_journal() if isinstance(r, dict) and r.get("rec") == "hold"]
    assert recs == []  # second hold records nothing
    state, _ = handle_event(state, op(3, 300, OP_RESUME))
    state.drain_journal()
    state, _ = handle_event(state, op(4, 400, OP_RESUME))
    recs = [r for r in state.drain_journal() if isinstance(r, dict) and r.get("rec") == "hold"]
    assert recs == []


# --- operator fire / skip / jump ----------------------------------------------


def test_op_fire_idle_skips_unmet_predecessors():
    state, _ = fresh()
    state, out = operator_command(state, OperatorCmd(OP_FIRE, cue_id="haptic"))
    assert state.cue_states["start"] == ST_SKIPPED
    assert state.cue_states["haptic"] == ST_COMPLETED
    assert [(c.kind, c.cue, c.cause) for c in out] == [(CMD_BUZZ, "haptic", "op")]


def test_op_fire_cross_scene_rejected():
    state, _ = fresh()
    with pytest.raises(EngineError) as err:
        operator_command(state, OperatorCmd(OP_FIRE, cue_id="arrive"))
    assert err.value.code == E_UNKNOWN_CUE


def test_op_fire_unknown_cue():
    state, _ = fresh()
    with pytest.raises(EngineError) as err:
        operator_command(state, OperatorCmd(OP_FIRE, cue_id="nope"))
    assert err.value.code == E_UNKNOWN_CUE


def test_op_fire_completed_rejected():
    state, _ = fresh()
    state, _ = operator_command(state, OperatorCmd(OP_FIRE, cue_id="haptic"))
    with pytest.raises(EngineError) as err:
        operator_command(state, OperatorCmd(OP_FIRE, cue_id="haptic"))
    assert err.value.code == E_ALREADY_COMPLETED


def test_op_fire_via_event_is_lenient():
    state, _ = fresh()
    state.drain_journal()
    state, out = handle_event(state, op(1, 50, OP_FIRE, cue_id="arrive"))
    assert out == []
    recs = [r for r in state.drain_journal() if isinstance(r, dict)]
    assert any(r.get("rec") == "ignored" for r in recs)


def test_op_skip_running_cue_stops_pending_media():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    state, out = operator_command(state, OperatorCmd(OP_SKIP, cue_id="start"))
    assert state.cue_states["start"] == ST_SKIPPED
    assert len(out) == 1
    stop = out[0]
    assert stop.kind == CMD_STOP_MEDIA
    assert stop.asset == "intro"
    assert stop.targets == ("h1", "h2")
    # content_end successor armed, not fired
    assert state.cue_states["haptic"] == ST_ARMED
    assert all(c.kind != CMD_BUZZ for c in out)
    # persistent timers for the skipped cue are gone
    assert [t for t in state.timers if t.cue == "start"] == []


def test_op_skip_idle_and_skipped():
    state, _ = fresh()
    state, out = operator_command(state, OperatorCmd(OP_SKIP, cue_id="haptic"))
    assert out == []
    assert state.cue_states["haptic"] == ST_SKIPPED
    # skipping again is a no-op
    state, out = operator_command(state, OperatorCmd(OP_SKIP, cue_id="haptic"))
    assert out == []


def test_op_skip_completed_rejected():
    state, _ = fresh()
    state, _ = operator_command(state, OperatorCmd(OP_FIRE, cue_id="haptic"))
    with pytest.raises(EngineError) as err:
        operator_command(state, OperatorCmd(OP_SKIP, cue_id="haptic"))
    assert err.value.code == E_ALREADY_COMPLETED


def test_op_skip_works_cross_scene():
    state, _ = fresh()
    state, out = operator_command(state, OperatorCmd(OP_SKIP, cue_id="arrive"))
    assert state.cue_states["arrive"] == ST_SKIPPED


def test_op_jump_closes_current_scene():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    state.drain_journal()
    state, out = operator_command(state, OperatorCmd(OP_JUMP, scene_id="two"))
    # running blocking cue stopped
    stops = [c for c in out if c.kind == CMD_STOP_MEDIA]
    assert len(stops) == 1 and stops[0].targets == ("h1", "h2")
    # everything unresolved in scene one is skipped
    for cid in ("start", "haptic", "late", "door_in", "leave"):
        assert state.cue_states[cid] == ST_SKIPPED
    assert state.scene().id == "two"
    assert state.cue_states["arrive"] == ST_ARMED
    # scene-start timer runs from the jump instant
    assert [(t.cue, t.fire_at) for t in state.timers] == [("arrive", 1500)]
    recs = [r for r in state.drain_journal() if isinstance(r, dict)]
    scene_recs = [r for r in recs if r.get("rec") == "scene"]
    assert scene_recs == [
        {"rec": "scene", "at": 1000, "from_scene": "one", "to_scene": "two", "cause": "op"}
    ]


def test_op_jump_unknown_scene():
    state, _ = fresh()
    with pytest.raises(EngineError) as err:
        operator_command(state, OperatorCmd(OP_JUMP, scene_id="nine"))
    assert err.value.code == E_UNKNOWN_SCENE


# --- advance and show end ------------------------------------------------------


def test_advance_action_moves_to_next_scene():
    state, _ = fresh()
    state, _ = operator_command(state, OperatorCmd(OP_FIRE, cue_id="leave"))
    assert state.scene().id == "two"
    assert state.cue_states["leave"] == ST_COMPLETED
    # scene one leftovers are skipped by the close
    assert state.cue_states["start"] == ST_SKIPPED


def test_advance_past_last_scene_ends_show():
    state, _ = fresh()
    state, _ = operator_command(state, OperatorCmd(OP_FIRE, cue_id="leave"))
    state.drain_journal()
    state, _ = operator_command(state, OperatorCmd(OP_FIRE, cue_id="finish"))
    assert state.ended
    recs = [r for r in state.drain_journal() if isinstance(r, dict)]
    assert any(r.get("rec") == "show_end" for r in recs)


# --- join / rejoin ---------------------------------------------------------


def test_first_join_no_snapshot():
    state, _ = fresh()
    state, out = handle_event(state, ev(1, 100, EV_JOINED, device="h2"))
    assert out == []
    assert "h2" in state.connected


def test_rejoin_hmd_gets_snapshot_with_live_seek():
    state, _ = fresh()
    state, _ = handle_event(state, ev(1, 100, EV_JOINED, device="h2"))
    state, _ = handle_event(state, ev(2, 200, EV_LEFT, device="h2"))
    state, _ = handle_event(state, button(3, 1000))
    state, out = handle_event(state, ev(4, 6000, EV_JOINED, device="h2"))
    assert len(out) == 1
    snap = out[0]
    assert snap.kind == CMD_SNAPSHOT
    assert snap.device == "h2"
    assert snap.payload.scene_id == "one"
    # start_at = 1000 + 150; elapsed at 6000 = 4850; seek = 0 + 4850
    assert [(m.cue, m.asset, m.seek_offset_ms) for m in snap.payload.media] == [
        ("start", "intro", 4850)
    ]


def test_rejoin_wearable_no_snapshot():
    state, _ = fresh()
    state, _ = handle_event(state, ev(1, 100, EV_JOINED, device="w1"))
    state, _ = handle_event(state, ev(2, 200, EV_LEFT, device="w1"))
    state, out = handle_event(state, ev(3, 300, EV_JOINED, device="w1"))
    assert out == []


def test_snapshot_before_media_start_at_clamps_to_zero():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    # logical_now 1000 < start_at 1150
    payload = snapshot(state, "h1")
    assert [m.seek_offset_ms for m in payload.media] == [0]


def test_snapshot_unknown_device():
    state, _ = fresh()
    with pytest.raises(EngineError) as err:
        snapshot(state, "zz")
    assert err.value.code == E_UNKNOWN_DEVICE


def test_join_unknown_device_ignored():
    state, _ = fresh()
    state.drain_journal()
    state, out = handle_event(state, ev(1, 100, EV_JOINED, device="zz"))
    assert out == []
    recs = [r for r in state.drain_journal() if isinstance(r, dict)]
    assert any(r.get("rec") == "ignored" for r in recs)


# --- ordering rules -----------------------------------------------------------


def test_stale_seq_rejected():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 10))
    with pytest.raises(EngineError) as err:
        handle_event(state, button(1, 20))
    assert err.value.code == E_STALE_SEQ


def test_equal_fire_at_timers_run_in_cue_id_order():
    text = '''\
show "Ties"
roster:
  hmd h1
  wearable w1
assets:
  audio a1 1000 "media/a1.ogg"
scene s:
  cue kick:
    trigger manual w1 go
    buzz w1 short
  cue zz:
    trigger auto_after kick 1000
    buzz w1 long
  cue aa:
    trigger auto_after kick 1000
    buzz w1 double
'''
    _, graph = build_show(text)
    state, _ = init_engine(graph, 0)
    state, _ = handle_event(state, button(1, 0))
    state, out = tick(state, 1000)
    assert [c.cue for c in out] == ["aa", "zz"]


def test_run_end_event_flushes_timers():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    state, out = handle_event(state, ev(2, 20000, EV_RUN_END))
    # the start timeout at 8151 chains haptic there, and arms late whose
    # delay then runs 8151 + 1000
    kinds = [(c.kind, c.cue, c.issued_at) for c in out]
    assert kinds == [(CMD_BUZZ, "haptic", 8151), (CMD_BUZZ, "late", 9151)]
    assert state.logical_now == 20000


def test_tick_never_moves_time_backwards():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 5000))
    state, out = tick(state, 100)
    assert out == []
    assert state.logical_now == 5000


# --- replay -------------------------------------------------------------------


def test_replay_reproduces_commands():
    _, graph = build_show(SHOW)
    events = [
        button(1, 1000),
        media_ended(2, 5000, "h1"),
        ev(3, 5100, "collider", collider="door", direction="enter"),
        media_ended(4, 5200, "h2"),
        op(5, 6000, OP_JUMP, scene_id="two"),
        button(6, 7000),
        ev(7, 30000, EV_RUN_END),
    ]
    state, commands = init_engine(graph, 0)
    for e in events:
        state, out = handle_event(state, e)
        commands.extend(out)
    assert replay(graph, events, 0) == commands


def test_state_summary_shape():
    state, _ = fresh()
    state, _ = handle_event(state, button(1, 1000))
    s = state_summary(state)
    assert s["title"] == "Engine Fixture"
    assert s["scene_id"] == "one"
    assert s["held"] is False
    assert s["ended"] is False
    assert s["logical_now"] == 1000
    assert s["last_seq"] == 1
    one = s["scenes"][0]
    assert one["current"] is True
    by_id = {c["id"]: c for c in one["cues"]}
    assert by_id["start"]["state"] == ST_RUNNING
    assert by_id["start"]["pending"] == [["h1", "intro"], ["h2", "intro"]]
    assert by_id["start"]["blocking"] is True
