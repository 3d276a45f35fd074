"""Diagnostics shared by the script parser and validator.

Each diagnostic carries a stable code, a source position and a human
message, and prints as ``path:line:col: CODE message`` (one per line).
"""

from __future__ import annotations

from dataclasses import dataclass

# Parse-time codes
E_SYNTAX = "E_SYNTAX"
E_DUP_ID = "E_DUP_ID"
E_UNKNOWN_FIELD = "E_UNKNOWN_FIELD"

# Validation codes
E_UNKNOWN_REF = "E_UNKNOWN_REF"
E_FORWARD_REF = "E_FORWARD_REF"
E_CROSS_SCENE_REF = "E_CROSS_SCENE_REF"
E_ROLE_MISMATCH = "E_ROLE_MISMATCH"
E_DEGENERATE_SHAPE = "E_DEGENERATE_SHAPE"
E_BAD_DURATION = "E_BAD_DURATION"
E_EMPTY_URI = "E_EMPTY_URI"
E_NO_ACTIONS = "E_NO_ACTIONS"
E_PHASE_DUP = "E_PHASE_DUP"
E_PHASE_ORDER = "E_PHASE_ORDER"
E_BAD_DELAY = "E_BAD_DELAY"
E_CONTENT_END_NOT_MEDIA = "E_CONTENT_END_NOT_MEDIA"

# Compilation codes
E_CYCLE = "E_CYCLE"
E_UNREACHABLE_CUE = "E_UNREACHABLE_CUE"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int = 0
    col: int = 0
    path: str = "<script>"

    def render(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.code} {self.message}"


def render_all(diagnostics: list[Diagnostic]) -> str:
    return "\n".join(d.render() for d in diagnostics)


class ParseError(Exception):
    """Raised when a document cannot be parsed into a ShowScript.

    Carries every diagnostic collected before the parser gave up, so a
    rehearsal edit with three typos reports all three.
    """

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__(render_all(diagnostics))


class CompileError(Exception):
    """Raised by the timeline compiler; carries a code and the cue at fault."""

    def __init__(self, code: str, message: str, cue_id: str | None = None):
        self.code = code
        self.cue_id = cue_id
        super().__init__(f"{code} {message}")
