from __future__ import annotations

from pathlib import Path

from stagelink.compiler import compile_timeline
from stagelink.diagnostics import render_all
from stagelink.parser import parse_script
from stagelink.validate import validate_script

TESTS_DIR = Path(__file__).resolve().parent
REPO_DIR = TESTS_DIR.parent
FIXTURES_DIR = TESTS_DIR / "fixtures"
DATA_DIR = TESTS_DIR / "data"
SHOWS_DIR = REPO_DIR / "shows"


def build_show(text: str, path: str = "<test>"):
    """Parse + validate + compile, failing loudly on any diagnostic."""
    script = parse_script(text, path)
    diags = validate_script(script, path)
    assert not diags, "\n" + render_all(diags)
    return script, compile_timeline(script)
