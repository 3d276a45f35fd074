"""Seeded-defect corpus: every fixture yields exactly its manifest diagnostics.

Each file under tests/fixtures/defects seeds one mistake (plus, for a couple
of them, its unavoidable knock-on) and the manifest pins the code, line and
column we expect back.  Files under tests/fixtures/valid must come through
the whole parse/validate/compile pipeline without a sound.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from stagelink.compiler import compile_timeline
from stagelink.diagnostics import ParseError
from stagelink.parser import parse_script
from stagelink.validate import validate_script

ROOT = Path(__file__).parent / "fixtures"
MANIFEST = json.loads((ROOT / "manifest.json").read_text(encoding="utf-8"))
ENTRIES = sorted(MANIFEST["fixtures"].items())


def pipeline_diagnostics(path: Path) -> list[tuple[str, int, int]]:
    """Same stages, in the same order, as `stagelink validate`."""
    text = path.read_text(encoding="utf-8")
    try:
        script = parse_script(text, path.name)
    except ParseError as exc:
        return [(d.code, d.line, d.col) for d in exc.diagnostics]
    diags = validate_script(script, path.name)
    if diags:
        return [(d.code, d.line, d.col) for d in diags]
    compile_timeline(script)  # valid fixtures must also compile
    return []


@pytest.mark.parametrize("rel,expected", ENTRIES, ids=[rel for rel, _ in ENTRIES])
def test_fixture_matches_manifest(rel, expected):
    got = pipeline_diagnostics(ROOT / rel)
    want = [(d["code"], d["line"], d["col"]) for d in expected]
    assert got == want


def test_corpus_has_enough_seeded_defects():
    defects = [rel for rel, diags in MANIFEST["fixtures"].items() if diags]
    clean = [rel for rel, diags in MANIFEST["fixtures"].items() if not diags]
    assert len(defects) >= 20
    assert len(clean) >= 2


def test_manifest_covers_every_fixture_file():
    on_disk = {
        str(p.relative_to(ROOT))
        for p in ROOT.rglob("*")
        if p.is_file() and p.name != "manifest.json"
    }
    assert on_disk == set(MANIFEST["fixtures"])
