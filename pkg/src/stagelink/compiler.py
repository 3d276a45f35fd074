"""Compile a show script into the cue graph the engine executes.

Dependency edges come from auto_after and content_end triggers only; manual,
collider and operator cues are roots.  Each scene must form a DAG.  The
compiler does not re-run semantic validation, but it refuses graphs it could
not execute: a dependency on a cue that is missing from the scene
(E_UNREACHABLE_CUE) or a dependency cycle (E_CYCLE), both of which are only
constructible when validation was skipped.
"""

from __future__ import annotations

from .diagnostics import E_CYCLE, E_UNREACHABLE_CUE, CompileError
from .model import (
    SCENE_START,
    AutoAfterTrigger,
    CompiledScene,
    ContentEndTrigger,
    CueGraph,
    CueNode,
    PlayMedia,
    Scene,
    ShowScript,
    Targets,
)


def resolve_targets(targets: Targets, script: ShowScript) -> tuple[str, ...]:
    """Static device list for an action's targets.

    all-hmds resolves against the roster at compile time; whether a device is
    actually connected when the command goes out is the gateway's concern.
    """
    if targets.all_hmds:
        return script.hmd_ids()
    seen: list[str] = []
    for device in targets.devices:
        if device not in seen:
            seen.append(device)
    return tuple(seen)


def _media_set(cue, script: ShowScript) -> tuple[tuple[str, str], ...]:
    if not cue.blocking:
        return ()
    pairs: list[tuple[str, str]] = []
    for action in cue.actions:
        if not isinstance(action, PlayMedia):
            continue
        for device in resolve_targets(action.targets, script):
            pair = (device, action.asset_id)
            if pair not in pairs:
                pairs.append(pair)
    return tuple(pairs)


def _compile_scene(scene: Scene, scene_index: int, script: ShowScript) -> CompiledScene:
    order = {cue.id: i for i, cue in enumerate(scene.cues)}

    predecessor: dict[str, str | None] = {}
    auto_succ: dict[str, list[tuple[str, int]]] = {cue.id: [] for cue in scene.cues}
    end_succ: dict[str, list[str]] = {cue.id: [] for cue in scene.cues}
    scene_start_timers: list[tuple[str, int]] = []

    for cue in scene.cues:
        pred: str | None = None
        t = cue.trigger
        if isinstance(t, AutoAfterTrigger):
            if t.predecessor == SCENE_START:
                scene_start_timers.append((cue.id, t.delay_ms))
            else:
                pred = t.predecessor
        elif isinstance(t, ContentEndTrigger):
            pred = t.predecessor
        if pred is not None and pred not in order:
            raise CompileError(
                E_UNREACHABLE_CUE,
                f"cue {cue.id!r} depends on {pred!r} which is not in scene {scene.id!r}",
                cue_id=cue.id,
            )
        predecessor[cue.id] = pred
        if pred is not None:
            if isinstance(t, AutoAfterTrigger):
                auto_succ[pred].append((cue.id, t.delay_ms))
            else:
                end_succ[pred].append(cue.id)

    # Kahn's algorithm.  Every node has at most one dependency predecessor,
    # so popping a node readies all its successors; ready cues are visited in
    # script order to keep the topological order deterministic.
    ready = [cue.id for cue in scene.cues if predecessor[cue.id] is None]
    topo: list[str] = []
    while ready:
        ready.sort(key=order.__getitem__)
        cid = ready.pop(0)
        topo.append(cid)
        ready.extend(s for s, _ in auto_succ[cid])
        ready.extend(end_succ[cid])
    if len(topo) != len(scene.cues):
        stuck = sorted(set(order) - set(topo))
        raise CompileError(
            E_CYCLE,
            f"dependency cycle in scene {scene.id!r} involving {', '.join(stuck)}",
        )

    nodes = tuple(
        CueNode(
            cue=cue,
            scene_index=scene_index,
            order_index=i,
            media_set=_media_set(cue, script),
            predecessor=predecessor[cue.id],
            auto_successors=tuple(auto_succ[cue.id]),
            content_end_successors=tuple(end_succ[cue.id]),
        )
        for i, cue in enumerate(scene.cues)
    )
    roots = tuple(cue.id for cue in scene.cues if predecessor[cue.id] is None)
    return CompiledScene(
        id=scene.id,
        phase=scene.phase,
        index=scene_index,
        cues=nodes,
        topo_order=tuple(topo),
        roots=roots,
        scene_start_timers=tuple(scene_start_timers),
    )


def compile_timeline(script: ShowScript) -> CueGraph:
    scenes = tuple(
        _compile_scene(scene, i, script) for i, scene in enumerate(script.scenes)
    )
    nodes: dict[str, CueNode] = {}
    for cs in scenes:
        for node in cs.cues:
            nodes[node.id] = node
    return CueGraph(
        script=script,
        scenes=scenes,
        nodes=nodes,
        assets={a.id: a for a in script.assets},
        colliders={c.id: c for c in script.colliders},
    )
