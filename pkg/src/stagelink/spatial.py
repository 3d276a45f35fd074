"""Pose-to-collider transition detection.

HMD self-localization jitters by centimeters, so raw containment tests flap
at volume boundaries.  Two guards sit between a pose report and an emitted
transition:

* hysteresis: entering requires the point strictly inside by the margin h
  (containment with margin -h); exiting requires it outside the inflated
  volume (no containment at margin +h).  Poses inside the band do nothing.
* debounce: the qualifying condition must hold continuously for at least
  debounce_ms before the transition emits.

Both have module defaults and per-collider overrides.  All tests are closed
(boundary counts as inside).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import (
    FILTER_HMD_ONLY,
    FILTER_WEARABLE_ONLY,
    ROLE_HMD,
    ROLE_WEARABLE,
    BoxShape,
    ColliderDecl,
    SphereShape,
)

DEFAULT_HYSTERESIS_M = 0.15
DEFAULT_DEBOUNCE_MS = 200

ENTER = "enter"
EXIT = "exit"

Vec3 = tuple[float, float, float]


def point_in_collider(p: Vec3, c: ColliderDecl, margin: float = 0.0) -> bool:
    if isinstance(c.shape, SphereShape):
        reach = c.shape.radius + margin
        if reach < 0:
            return False
        dx = p[0] - c.shape.center[0]
        dy = p[1] - c.shape.center[1]
        dz = p[2] - c.shape.center[2]
        return math.sqrt(dx * dx + dy * dy + dz * dz) <= reach
    if isinstance(c.shape, BoxShape):
        return all(
            c.shape.min[i] - margin <= p[i] <= c.shape.max[i] + margin for i in range(3)
        )
    raise TypeError(f"unknown shape {type(c.shape).__name__}")


def subject_matches(c: ColliderDecl, role: str) -> bool:
    if c.subject_filter == FILTER_HMD_ONLY:
        return role == ROLE_HMD
    if c.subject_filter == FILTER_WEARABLE_ONLY:
        return role == ROLE_WEARABLE
    return True


@dataclass(frozen=True)
class Transition:
    device: str
    collider: str
    direction: str  # enter | exit
    at: int


@dataclass
class _PairState:
    inside: bool = False
    candidate_since: int | None = None


@dataclass
class PoseTracker:
    """Per-(device, collider) containment state over a pose stream.

    Pure state machine: update_pose is the only mutator, and identical pose
    sequences yield identical transition sequences.
    """

    colliders: tuple[ColliderDecl, ...]
    roles: dict[str, str]  # device id -> role
    pairs: dict[tuple[str, str], _PairState] = field(default_factory=dict)

    def update_pose(self, device: str, p: Vec3, now: int) -> list[Transition]:
        role = self.roles.get(device, "")
        out: list[Transition] = []
        for c in self.colliders:
            if not subject_matches(c, role):
                continue
            st = self.pairs.setdefault((device, c.id), _PairState())
            h = DEFAULT_HYSTERESIS_M if c.hysteresis_m is None else c.hysteresis_m
            debounce = DEFAULT_DEBOUNCE_MS if c.debounce_ms is None else c.debounce_ms
            if st.inside:
                qualifies = not point_in_collider(p, c, +h)
                direction = EXIT
            else:
                qualifies = point_in_collider(p, c, -h)
                direction = ENTER
            if not qualifies:
                st.candidate_since = None
                continue
            if st.candidate_since is None:
                st.candidate_since = now
            if now - st.candidate_since >= debounce:
                st.inside = not st.inside
                st.candidate_since = None
                out.append(Transition(device, c.id, direction, now))
        return out
