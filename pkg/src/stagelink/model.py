"""Domain model for show scripts and their compiled cue graphs.

A show script is the single document describing a performance: the device
roster, media assets, spatial trigger volumes, and an ordered list of scenes
containing cues.  Everything here is a plain dataclass; parsing, validation
and compilation live in sibling modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Reserved predecessor id for auto_after triggers counted from scene entry.
SCENE_START = "scene-start"

ROLE_HMD = "hmd"
ROLE_WEARABLE = "wearable"
ROLE_OPERATOR = "operator"

PHASE_ONBOARDING = "onboarding"
PHASE_MAIN = "main"
PHASE_OFFBOARDING = "offboarding"
PHASES = (PHASE_ONBOARDING, PHASE_MAIN, PHASE_OFFBOARDING)

FILTER_ANY = "any"
FILTER_HMD_ONLY = "hmd-only"
FILTER_WEARABLE_ONLY = "wearable-only"
SUBJECT_FILTERS = (FILTER_ANY, FILTER_HMD_ONLY, FILTER_WEARABLE_ONLY)

ASSET_SPATIAL = "spatial-media"
ASSET_AUDIO = "audio"
ASSET_KINDS = (ASSET_SPATIAL, ASSET_AUDIO)

BUZZ_PATTERNS = ("short", "long", "double")


@dataclass(frozen=True)
class Loc:
    """Source position (1-based) of a construct in the script text."""

    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class DeviceDecl:
    id: str
    role: str  # hmd | wearable
    label: str = ""
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class AssetDecl:
    id: str
    kind: str  # spatial-media | audio
    duration_ms: int
    uri: str
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class SphereShape:
    center: tuple[float, float, float]
    radius: float


@dataclass(frozen=True)
class BoxShape:
    min: tuple[float, float, float]
    max: tuple[float, float, float]


@dataclass(frozen=True)
class ColliderDecl:
    id: str
    shape: SphereShape | BoxShape
    subject_filter: str = FILTER_ANY
    # Per-collider overrides for the pose tracker; None means module default.
    hysteresis_m: float | None = None
    debounce_ms: int | None = None
    loc: Loc = field(default=Loc(), compare=False)


# --- triggers -------------------------------------------------------------


@dataclass(frozen=True)
class ManualTrigger:
    device_id: str
    button_id: str
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class AutoAfterTrigger:
    predecessor: str  # cue id or SCENE_START
    delay_ms: int
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class ColliderTrigger:
    collider_id: str
    direction: str  # "enter" | "exit"
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class ContentEndTrigger:
    predecessor: str
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class OperatorTrigger:
    loc: Loc = field(default=Loc(), compare=False)


Trigger = (
    ManualTrigger | AutoAfterTrigger | ColliderTrigger | ContentEndTrigger | OperatorTrigger
)


# --- actions ----------------------------------------------------------------

ALL_HMDS = "all-hmds"


@dataclass(frozen=True)
class Targets:
    """Either the all-hmds group or an explicit device list."""

    all_hmds: bool = False
    devices: tuple[str, ...] = ()

    @staticmethod
    def group() -> "Targets":
        return Targets(all_hmds=True)

    @staticmethod
    def of(*devices: str) -> "Targets":
        return Targets(devices=tuple(devices))


@dataclass(frozen=True)
class PlayMedia:
    asset_id: str
    targets: Targets
    start_offset_ms: int = 0
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class StopMedia:
    asset_id: str
    targets: Targets
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class BuzzAction:
    device_id: str
    pattern: str  # short | long | double
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class AdvanceScene:
    loc: Loc = field(default=Loc(), compare=False)


Action = PlayMedia | StopMedia | BuzzAction | AdvanceScene


@dataclass(frozen=True)
class Cue:
    id: str
    trigger: Trigger
    actions: tuple[Action, ...]
    blocking: bool = False
    notes: tuple[str, ...] = ()
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Scene:
    id: str
    phase: str = PHASE_MAIN
    cues: tuple[Cue, ...] = ()
    notes: tuple[str, ...] = ()
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class ShowScript:
    title: str = ""
    roster: tuple[DeviceDecl, ...] = ()
    assets: tuple[AssetDecl, ...] = ()
    colliders: tuple[ColliderDecl, ...] = ()
    scenes: tuple[Scene, ...] = ()

    def device(self, device_id: str) -> DeviceDecl | None:
        for d in self.roster:
            if d.id == device_id:
                return d
        return None

    def hmd_ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.roster if d.role == ROLE_HMD)

    def wearable_ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.roster if d.role == ROLE_WEARABLE)


# --- compiled form ----------------------------------------------------------


@dataclass(frozen=True)
class CueNode:
    """A cue with references resolved and dependency bookkeeping attached."""

    cue: Cue
    scene_index: int
    order_index: int  # position within the scene, script order
    # (device_id, asset_id) pairs whose MediaEnded completes this cue.
    # Non-empty only for blocking cues with play actions.
    media_set: tuple[tuple[str, str], ...] = ()
    # Single dependency predecessor (auto_after / content_end), if any.
    predecessor: str | None = None
    # Successor cue ids keyed by how they follow this cue.
    auto_successors: tuple[tuple[str, int], ...] = ()  # (cue_id, delay_ms)
    content_end_successors: tuple[str, ...] = ()

    @property
    def id(self) -> str:
        return self.cue.id


@dataclass(frozen=True)
class CompiledScene:
    id: str
    phase: str
    index: int
    cues: tuple[CueNode, ...]  # script order
    topo_order: tuple[str, ...]  # cue ids, dependency-respecting
    roots: tuple[str, ...]  # cues with no cue predecessor
    # auto_after cues hanging off scene entry: (cue_id, delay_ms)
    scene_start_timers: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class CueGraph:
    script: ShowScript
    scenes: tuple[CompiledScene, ...]
    nodes: dict[str, CueNode]  # cue id -> node, across all scenes
    assets: dict[str, AssetDecl]
    colliders: dict[str, ColliderDecl]

    def scene_of(self, cue_id: str) -> CompiledScene:
        return self.scenes[self.nodes[cue_id].scene_index]

    def scene_by_id(self, scene_id: str) -> CompiledScene | None:
        for s in self.scenes:
            if s.id == scene_id:
                return s
        return None
