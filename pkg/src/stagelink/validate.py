"""Semantic validation of a parsed show script.

``validate_script`` returns a list of diagnostics; an empty list means every
cross-reference resolves and every declaration invariant holds.  Each
diagnostic names the offending id and the rule it broke.  Parsing guarantees
structure only, so everything here must assume arbitrary field values
(notably scripts arriving via the JSON encoding).
"""

from __future__ import annotations

import math

from .diagnostics import (
    E_BAD_DELAY,
    E_BAD_DURATION,
    E_CONTENT_END_NOT_MEDIA,
    E_CROSS_SCENE_REF,
    E_DEGENERATE_SHAPE,
    E_EMPTY_URI,
    E_FORWARD_REF,
    E_NO_ACTIONS,
    E_PHASE_DUP,
    E_PHASE_ORDER,
    E_ROLE_MISMATCH,
    E_SYNTAX,
    E_UNKNOWN_FIELD,
    E_UNKNOWN_REF,
    Diagnostic,
)
from .model import (
    ASSET_KINDS,
    BUZZ_PATTERNS,
    PHASE_OFFBOARDING,
    PHASE_ONBOARDING,
    ROLE_HMD,
    ROLE_WEARABLE,
    SCENE_START,
    SUBJECT_FILTERS,
    AdvanceScene,
    AutoAfterTrigger,
    BoxShape,
    BuzzAction,
    ColliderTrigger,
    ContentEndTrigger,
    Cue,
    Loc,
    ManualTrigger,
    PlayMedia,
    ShowScript,
    SphereShape,
    StopMedia,
    Targets,
)


def validate_script(script: ShowScript, path: str = "<script>") -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    def err(code: str, msg: str, loc: Loc) -> None:
        diags.append(Diagnostic(code, msg, loc.line, loc.col, path))

    devices = {d.id: d for d in script.roster}
    assets = {a.id: a for a in script.assets}
    collider_ids = {c.id for c in script.colliders}
    hmd_count = sum(1 for d in script.roster if d.role == ROLE_HMD)

    # --- declarations ------------------------------------------------------

    for d in script.roster:
        if not d.id:
            err(E_SYNTAX, "device with empty id", d.loc)
        if d.role not in (ROLE_HMD, ROLE_WEARABLE):
            err(E_UNKNOWN_FIELD, f"device {d.id!r} has unknown role {d.role!r}", d.loc)

    for a in script.assets:
        if not a.id:
            err(E_SYNTAX, "asset with empty id", a.loc)
        if a.kind not in ASSET_KINDS:
            err(E_UNKNOWN_FIELD, f"asset {a.id!r} has unknown kind {a.kind!r}", a.loc)
        if a.duration_ms <= 0:
            err(E_BAD_DURATION, f"asset {a.id!r} duration must be > 0 ms", a.loc)
        if not a.uri:
            err(E_EMPTY_URI, f"asset {a.id!r} has an empty uri", a.loc)

    for c in script.colliders:
        if not c.id:
            err(E_SYNTAX, "collider with empty id", c.loc)
        if isinstance(c.shape, SphereShape):
            if not all(math.isfinite(v) for v in (*c.shape.center, c.shape.radius)):
                err(E_DEGENERATE_SHAPE, f"collider {c.id!r} has non-finite geometry", c.loc)
            elif c.shape.radius <= 0:
                err(E_DEGENERATE_SHAPE, f"collider {c.id!r} radius must be > 0", c.loc)
        elif isinstance(c.shape, BoxShape):
            if not all(math.isfinite(v) for v in (*c.shape.min, *c.shape.max)):
                err(E_DEGENERATE_SHAPE, f"collider {c.id!r} has non-finite geometry", c.loc)
            elif any(lo >= hi for lo, hi in zip(c.shape.min, c.shape.max)):
                err(
                    E_DEGENERATE_SHAPE,
                    f"collider {c.id!r} box must satisfy min < max on every axis",
                    c.loc,
                )
        if c.subject_filter not in SUBJECT_FILTERS:
            err(
                E_UNKNOWN_FIELD,
                f"collider {c.id!r} has unknown subject filter {c.subject_filter!r}",
                c.loc,
            )
        if c.hysteresis_m is not None and c.hysteresis_m < 0:
            err(E_DEGENERATE_SHAPE, f"collider {c.id!r} hysteresis must be >= 0", c.loc)
        if c.debounce_ms is not None and c.debounce_ms < 0:
            err(E_BAD_DELAY, f"collider {c.id!r} debounce must be >= 0 ms", c.loc)

    # --- scene phases ------------------------------------------------------

    last = len(script.scenes) - 1
    seen_phase: set[str] = set()
    for idx, s in enumerate(script.scenes):
        if s.phase in (PHASE_ONBOARDING, PHASE_OFFBOARDING):
            if s.phase in seen_phase:
                err(E_PHASE_DUP, f"more than one {s.phase} scene ({s.id!r})", s.loc)
            seen_phase.add(s.phase)
            if s.phase == PHASE_ONBOARDING and idx != 0:
                err(E_PHASE_ORDER, f"onboarding scene {s.id!r} must come first", s.loc)
            if s.phase == PHASE_OFFBOARDING and idx != last:
                err(E_PHASE_ORDER, f"offboarding scene {s.id!r} must come last", s.loc)

    # --- cues ----------------------------------------------------------------

    cue_scene: dict[str, str] = {}
    for s in script.scenes:
        for cue in s.cues:
            cue_scene.setdefault(cue.id, s.id)

    def check_targets(cue: Cue, t: Targets, verb: str, loc: Loc) -> None:
        if t.all_hmds:
            if hmd_count == 0:
                err(
                    E_UNKNOWN_REF,
                    f"cue {cue.id!r} {verb}s to all-hmds but the roster has no hmds",
                    loc,
                )
            return
        if not t.devices:
            err(E_SYNTAX, f"cue {cue.id!r} {verb} has an empty target list", loc)
        for dev in t.devices:
            decl = devices.get(dev)
            if decl is None:
                err(E_UNKNOWN_REF, f"cue {cue.id!r} {verb}s to unknown device {dev!r}", loc)
            elif decl.role != ROLE_HMD:
                err(
                    E_ROLE_MISMATCH,
                    f"cue {cue.id!r} {verb}s media to {dev!r} which is not an hmd",
                    loc,
                )

    def check_pred(
        cue: Cue,
        pred: str,
        scene_cues: dict[str, int],
        my_index: int,
        loc: Loc,
        allow_scene_start: bool,
    ) -> None:
        """Shared predecessor rules for auto_after and content_end triggers."""
        if pred == SCENE_START:
            if not allow_scene_start:
                err(
                    E_UNKNOWN_REF,
                    f"cue {cue.id!r} content_end cannot follow {SCENE_START!r}",
                    loc,
                )
            return
        if pred not in scene_cues:
            if pred in cue_scene:
                err(
                    E_CROSS_SCENE_REF,
                    f"cue {cue.id!r} references {pred!r} in another scene ({cue_scene[pred]!r})",
                    loc,
                )
            else:
                err(E_UNKNOWN_REF, f"cue {cue.id!r} references unknown cue {pred!r}", loc)
            return
        if scene_cues[pred] >= my_index:
            err(
                E_FORWARD_REF,
                f"cue {cue.id!r} references {pred!r} which is not an earlier cue",
                loc,
            )

    for s in script.scenes:
        scene_cues = {cue.id: i for i, cue in enumerate(s.cues)}
        by_id = {cue.id: cue for cue in s.cues}
        for my_index, cue in enumerate(s.cues):
            t = cue.trigger
            tloc = t.loc if t.loc.line else cue.loc
            if isinstance(t, ManualTrigger):
                decl = devices.get(t.device_id)
                if decl is None:
                    err(
                        E_UNKNOWN_REF,
                        f"cue {cue.id!r} manual trigger references unknown device {t.device_id!r}",
                        tloc,
                    )
                elif decl.role != ROLE_WEARABLE:
                    err(
                        E_ROLE_MISMATCH,
                        f"cue {cue.id!r} manual trigger device {t.device_id!r} is not a wearable",
                        tloc,
                    )
            elif isinstance(t, AutoAfterTrigger):
                if t.delay_ms < 0:
                    err(E_BAD_DELAY, f"cue {cue.id!r} auto_after delay must be >= 0 ms", tloc)
                check_pred(cue, t.predecessor, scene_cues, my_index, tloc, allow_scene_start=True)
            elif isinstance(t, ContentEndTrigger):
                check_pred(cue, t.predecessor, scene_cues, my_index, tloc, allow_scene_start=False)
                pred = by_id.get(t.predecessor)
                if (
                    pred is not None
                    and scene_cues[t.predecessor] < my_index
                    and not (pred.blocking and any(isinstance(a, PlayMedia) for a in pred.actions))
                ):
                    err(
                        E_CONTENT_END_NOT_MEDIA,
                        f"cue {cue.id!r} waits for content end of {t.predecessor!r}, "
                        "which is not a blocking media cue",
                        tloc,
                    )
            elif isinstance(t, ColliderTrigger):
                if t.collider_id not in collider_ids:
                    err(
                        E_UNKNOWN_REF,
                        f"cue {cue.id!r} references unknown collider {t.collider_id!r}",
                        tloc,
                    )

            if not cue.actions:
                err(E_NO_ACTIONS, f"cue {cue.id!r} has no actions", cue.loc)
            for a in cue.actions:
                aloc = a.loc if a.loc.line else cue.loc
                if isinstance(a, PlayMedia):
                    asset = assets.get(a.asset_id)
                    if asset is None:
                        err(
                            E_UNKNOWN_REF,
                            f"cue {cue.id!r} plays unknown asset {a.asset_id!r}",
                            aloc,
                        )
                    check_targets(cue, a.targets, "play", aloc)
                    if a.start_offset_ms < 0:
                        err(E_BAD_DELAY, f"cue {cue.id!r} start offset must be >= 0 ms", aloc)
                    elif asset is not None and 0 < asset.duration_ms <= a.start_offset_ms:
                        err(
                            E_BAD_DURATION,
                            f"cue {cue.id!r} start offset {a.start_offset_ms} ms is past "
                            f"the end of asset {a.asset_id!r}",
                            aloc,
                        )
                elif isinstance(a, StopMedia):
                    if a.asset_id not in assets:
                        err(
                            E_UNKNOWN_REF,
                            f"cue {cue.id!r} stops unknown asset {a.asset_id!r}",
                            aloc,
                        )
                    check_targets(cue, a.targets, "stop", aloc)
                elif isinstance(a, BuzzAction):
                    decl = devices.get(a.device_id)
                    if decl is None:
                        err(
                            E_UNKNOWN_REF,
                            f"cue {cue.id!r} buzzes unknown device {a.device_id!r}",
                            aloc,
                        )
                    elif decl.role != ROLE_WEARABLE:
                        err(
                            E_ROLE_MISMATCH,
                            f"cue {cue.id!r} buzzes {a.device_id!r} which is not a wearable",
                            aloc,
                        )
                    if a.pattern not in BUZZ_PATTERNS:
                        err(
                            E_UNKNOWN_FIELD,
                            f"cue {cue.id!r} uses unknown buzz pattern {a.pattern!r}",
                            aloc,
                        )
                elif isinstance(a, AdvanceScene):
                    pass

    diags.sort(key=lambda d: (d.line, d.col, d.code))
    return diags
