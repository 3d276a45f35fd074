"""End-user command line behaviour: exit codes and file outputs."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from stagelink.cli import main

SHOW = '''\
show "CLI Fixture"
roster:
  hmd h1
  wearable w1
assets:
  audio track 2000 "media/track.ogg"
scene main:
  cue go blocking:
    trigger manual w1 press
    play track all-hmds
  cue thanks:
    trigger content_end go
    buzz w1 short
'''

BROKEN = '''\
show "Broken"
roster:
  hmd h1
scene main:
  cue a:
    trigger manual ghost press
    buzz ghost short
'''

SCN = '''\
scenario "cli pass"
script "fixture.show"
seed 9
net 10 0

device h1:
  join 0

device w1:
  join 0
  press 1000 press
'''


@pytest.fixture()
def show_dir(tmp_path):
    (tmp_path / "fixture.show").write_text(SHOW, encoding="utf-8")
    (tmp_path / "fixture.scn").write_text(SCN, encoding="utf-8")
    return tmp_path


def test_validate_ok(show_dir, capsys):
    assert main(["validate", str(show_dir / "fixture.show")]) == 0
    out = capsys.readouterr().out
    assert "ok (1 scenes, 2 cues, 2 devices)" in out


def test_validate_quiet_prints_nothing(show_dir, capsys):
    assert main(["validate", "--quiet", str(show_dir / "fixture.show")]) == 0
    assert capsys.readouterr().out == ""


def test_validate_reports_diagnostics(tmp_path, capsys):
    path = tmp_path / "broken.show"
    path.write_text(BROKEN, encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    err = capsys.readouterr().err
    assert "E_UNKNOWN_REF" in err
    assert f"{path}:6:" in err  # file:line: prefix on each diagnostic


def test_validate_parse_error(tmp_path, capsys):
    path = tmp_path / "junk.show"
    path.write_text("not a show\n", encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    assert "E_" in capsys.readouterr().err


def test_validate_missing_file(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "absent.show")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_sim_writes_log_and_report(show_dir, capsys):
    log = show_dir / "out.ndjson"
    report = show_dir / "report.json"
    code = main(
        ["sim", str(show_dir / "fixture.scn"), "--log", str(log), "--report", str(report)]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "sim 'cli pass' seed=9" in out
    assert "2 completed, 0 skipped of 2" in out

    first = json.loads(log.read_text(encoding="utf-8").splitlines()[0])
    assert first["rec"] == "meta"
    assert first["seed"] == 9

    payload = json.loads(report.read_text(encoding="utf-8"))
    assert payload["completed"] is True
    assert payload["cue_latency_ms"]


def test_sim_seed_flag_overrides_scenario(show_dir):
    log_a = show_dir / "a.ndjson"
    log_b = show_dir / "b.ndjson"
    assert main(["sim", str(show_dir / "fixture.scn"), "--quiet", "--seed", "123",
                 "--log", str(log_a)]) == 0
    assert main(["sim", str(show_dir / "fixture.scn"), "--quiet", "--seed", "123",
                 "--log", str(log_b)]) == 0
    assert log_a.read_bytes() == log_b.read_bytes()
    assert json.loads(log_a.read_text().splitlines()[0])["seed"] == 123


def test_sim_incomplete_run_exits_one(show_dir, capsys):
    scn = show_dir / "short.scn"
    scn.write_text(SCN + "\nend 500\n", encoding="utf-8")
    assert main(["sim", str(scn), "--quiet"]) == 1


def test_sim_bad_scenario(show_dir, capsys):
    scn = show_dir / "bad.scn"
    scn.write_text('scenario "x"\nscript "fixture.show"\nwarp 5\n', encoding="utf-8")
    assert main(["sim", str(scn)]) == 1
    assert "E_SYNTAX unknown scenario directive" in capsys.readouterr().err


def test_replay_pass_and_divergence(show_dir, capsys):
    log = show_dir / "run.ndjson"
    assert main(["sim", str(show_dir / "fixture.scn"), "--quiet", "--log", str(log)]) == 0
    assert main(["replay", str(log), str(show_dir / "fixture.show")]) == 0
    assert "replay: pass" in capsys.readouterr().out

    lines = log.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        rec = json.loads(line)
        if rec["rec"] == "command" and rec["kind"] == "buzz":
            rec["pattern"] = "long"
            lines[i] = json.dumps(rec, separators=(",", ":"), sort_keys=True)
            break
    log.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main(["replay", str(log), str(show_dir / "fixture.show")]) == 1
    assert "divergence" in capsys.readouterr().out


def test_replay_missing_log(show_dir, capsys):
    assert main(["replay", str(show_dir / "nope.ndjson"), str(show_dir / "fixture.show")]) == 2


def test_replay_corrupt_log(show_dir, capsys):
    log = show_dir / "corrupt.ndjson"
    log.write_text("{not json\n", encoding="utf-8")
    assert main(["replay", str(log), str(show_dir / "fixture.show")]) == 2
    assert "error:" in capsys.readouterr().err


def test_metrics_recomputes_report(show_dir, capsys):
    log = show_dir / "run.ndjson"
    report = show_dir / "report.json"
    main(["sim", str(show_dir / "fixture.scn"), "--quiet",
          "--log", str(log), "--report", str(report)])
    assert main(["metrics", str(log), str(show_dir / "fixture.scn")]) == 0
    stdout = capsys.readouterr().out
    assert json.loads(stdout) == json.loads(report.read_text(encoding="utf-8"))


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["conjure"])
    assert exc.value.code == 2


def test_module_entry_point(show_dir):
    proc = subprocess.run(
        [sys.executable, "-m", "stagelink.cli", "validate", str(show_dir / "fixture.show")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "ok" in proc.stdout


def test_console_script_on_path(show_dir):
    proc = subprocess.run(
        ["stagelink", "validate", "--quiet", str(show_dir / "fixture.show")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
