"""Log serialization round-trips and replay checking."""

from __future__ import annotations

import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import build_show
from stagelink.engine import (
    EngineConfig,
    Event,
    OperatorCmd,
    handle_event,
    init_engine,
)
from stagelink.runlog import (
    LogError,
    command_lines,
    config_from_meta,
    dump_record,
    event_record,
    events_from_log,
    log_meta,
    meta_record,
    read_log,
    replay_check,
    write_log,
)

SHOW = '''\
show "Log Fixture"
roster:
  hmd h1
  wearable w1
assets:
  audio a1 2000 "media/a1.ogg"
scene s1:
  cue c1 blocking:
    trigger manual w1 go
    play a1 h1
  cue c2:
    trigger content_end c1
    buzz w1 short
'''


def run_fixture():
    """Produce a full record list the way the sim does: meta, then events
    interleaved with drained journal entries."""
    _, graph = build_show(SHOW)
    config = EngineConfig()
    records = [
        meta_record(
            script_path="show.show",
            title="Log Fixture",
            seed=7,
            start_at=0,
            config=config,
        )
    ]
    state, _ = init_engine(graph, 0, config)
    for rec in state.drain_journal():
        records.append(rec if isinstance(rec, dict) else rec.to_dict())
    events = [
        Event(seq=1, at=100, kind="button", device="w1", button="go"),
        Event(seq=2, at=2400, kind="media_ended", device="h1", asset="a1"),
        Event(seq=3, at=9000, kind="run_end"),
    ]
    for e in events:
        records.append(event_record(e))
        state, _ = handle_event(state, e)
        for rec in state.drain_journal():
            records.append(rec if isinstance(rec, dict) else rec.to_dict())
    return graph, records


def test_dump_record_is_canonical():
    assert dump_record({"b": 1, "a": [2, 3]}) == '{"a":[2,3],"b":1}'


def test_write_then_read_round_trip():
    graph, records = run_fixture()
    buf = io.StringIO()
    write_log(buf, records)
    text = buf.getvalue()
    assert text.endswith("\n")
    back = read_log(io.StringIO(text))
    assert back == json.loads(json.dumps(records))  # tuples collapse to lists


def test_meta_first_and_fields():
    _, records = run_fixture()
    meta = log_meta(records)
    assert meta["rec"] == "meta"
    assert meta["format"] == 1
    assert meta["seed"] == 7
    assert config_from_meta(meta) == EngineConfig()


def test_log_meta_rejects_headless_log():
    with pytest.raises(LogError):
        log_meta([{"rec": "event"}])


def test_read_log_rejects_bad_json():
    with pytest.raises(LogError) as err:
        read_log(['{"rec":"meta"}', "{nope"])
    assert err.value.line == 2


def test_read_log_rejects_non_objects():
    with pytest.raises(LogError):
        read_log(["[1,2,3]"])
    with pytest.raises(LogError):
        read_log(['{"no_rec_field":1}'])


def test_read_log_rejects_empty():
    with pytest.raises(LogError):
        read_log([])
    with pytest.raises(LogError):
        read_log(["", "\n"])


def test_read_log_skips_blank_lines():
    recs = read_log(['{"rec":"meta"}', "", '{"rec":"event","seq":1}'])
    assert len(recs) == 2


def test_event_record_round_trip():
    e = Event(
        seq=4,
        at=250,
        kind="operator_cmd",
        cmd=OperatorCmd("jump", scene_id="two"),
    )
    rec = event_record(e)
    back = events_from_log([{"rec": "meta"}, json.loads(dump_record(rec))])
    assert back == [e]


def test_event_record_omits_empty_fields():
    rec = event_record(Event(seq=1, at=5, kind="button", device="w1", button="go"))
    assert set(rec) == {"rec", "seq", "at", "kind", "device", "button"}


def test_events_from_log_enforces_monotonic_seq():
    records = [
        {"rec": "event", "seq": 2, "at": 0, "kind": "button"},
        {"rec": "event", "seq": 2, "at": 5, "kind": "button"},
    ]
    with pytest.raises(LogError) as err:
        events_from_log(records)
    assert "monotonicity" in str(err.value)


def test_events_from_log_rejects_missing_fields():
    with pytest.raises(LogError):
        events_from_log([{"rec": "event", "seq": 1}])


def test_replay_check_passes_on_faithful_log():
    graph, records = run_fixture()
    result = replay_check(records, graph)
    assert result.passed
    assert result.describe() == "replay: pass"


def test_replay_check_spots_divergence():
    graph, records = run_fixture()
    tampered = []
    for rec in records:
        if rec.get("rec") == "command" and rec.get("kind") == "buzz":
            rec = dict(rec, pattern="long")
        tampered.append(rec)
    result = replay_check(tampered, graph)
    assert not result.passed
    assert '"pattern":"long"' in result.expected
    assert '"pattern":"short"' in result.actual
    assert "divergence" in result.describe()


def test_replay_check_spots_missing_command():
    graph, records = run_fixture()
    pruned = [r for r in records if not (r.get("rec") == "command" and r.get("kind") == "buzz")]
    result = replay_check(pruned, graph)
    assert not result.passed
    assert result.expected == ""  # log ran out first


def test_command_lines_filters_and_serializes():
    graph, records = run_fixture()
    lines = command_lines(records)
    assert len(lines) == 2  # start_media + buzz
    for line in lines:
        assert json.loads(line)["rec"] == "command"


@given(
    st.dictionaries(
        st.text(min_size=1, max_size=8),
        st.one_of(st.integers(), st.text(max_size=8), st.booleans()),
        max_size=6,
    )
)
def test_dump_record_stable_under_key_order(extra):
    rec = {"rec": "x", **extra}
    shuffled = dict(reversed(list(rec.items())))
    assert dump_record(rec) == dump_record(shuffled)
