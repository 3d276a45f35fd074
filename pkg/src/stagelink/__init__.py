"""Show control for mixed reality performances on real streets.

The pipeline: parse a show script, validate it, compile the cue graph, then
either drive it live (server) or deterministically (sim).  Run logs close
the loop: replay folds the logged events back through the engine and must
reproduce every command byte for byte.
"""

from __future__ import annotations

from .compiler import compile_timeline
from .diagnostics import CompileError, Diagnostic, ParseError
from .engine import (
    Command,
    EngineConfig,
    EngineError,
    EngineState,
    Event,
    OperatorCmd,
    handle_event,
    init_engine,
    operator_command,
    replay,
    tick,
)
from .model import CueGraph, ShowScript
from .parser import parse_script, script_to_json, serialize_script
from .scenario import Scenario, load_scenario, parse_scenario
from .sim import SimResult, run_scenario
from .validate import validate_script

__version__ = "0.1.0"

__all__ = [
    "Command",
    "CompileError",
    "CueGraph",
    "Diagnostic",
    "EngineConfig",
    "EngineError",
    "EngineState",
    "Event",
    "OperatorCmd",
    "ParseError",
    "Scenario",
    "ShowScript",
    "SimResult",
    "compile_timeline",
    "handle_event",
    "init_engine",
    "load_scenario",
    "operator_command",
    "parse_scenario",
    "parse_script",
    "replay",
    "run_scenario",
    "script_to_json",
    "serialize_script",
    "tick",
    "validate_script",
]
