"""Device gateway core: sessions, event serialization, command dispatch.

This is the synchronous heart of the network boundary.  It takes explicit
`now` arguments everywhere and touches no sockets, so the simulation drives
it with virtual time and the live server wraps it with asyncio.  Whatever
the transport, all inbound traffic funnels through one GatewayCore, which
assigns the global event seq: the total order the engine consumes.

Inbound message types: hello, heartbeat, pong, button, pose, media_ended,
ack.  Outbound: ping, start_media, stop_media, buzz, snapshot.  start_media
frames carry start_at translated into the device's clock using the current
offset estimate, which is how one "go" lands on every HMD of a group at the
same instant.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .clocksync import PingSample, estimate_clock_offset
from .engine import (
    CMD_BUZZ,
    CMD_SNAPSHOT,
    CMD_START_MEDIA,
    CMD_STOP_MEDIA,
    EV_BUTTON,
    EV_COLLIDER,
    EV_JOINED,
    EV_LEFT,
    EV_MEDIA_ENDED,
    EV_OP,
    Command,
    Event,
    OperatorCmd,
)
from .model import ROLE_HMD, ROLE_OPERATOR, ROLE_WEARABLE, ShowScript
from .spatial import PoseTracker

E_UNKNOWN_ROLE = "E_UNKNOWN_ROLE"
E_ROSTER_MISMATCH = "E_ROSTER_MISMATCH"
E_NO_TARGETS = "E_NO_TARGETS"

PING_WINDOW = 8
PINGS_AT_REGISTRATION = 8
PING_INTERVAL_MS = 10_000


class GatewayError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class GatewayConfig:
    heartbeat_ms: int = 1000
    stale_multiplier: int = 3

    @property
    def stale_after_ms(self) -> int:
        return self.heartbeat_ms * self.stale_multiplier


@dataclass
class DeviceSession:
    device_id: str
    role: str
    connected: bool = True
    degraded: bool = False
    last_heartbeat_at: int = 0
    clock_offset: float | None = None  # device clock - server clock
    offset_confidence: float | None = None
    samples: deque = field(default_factory=lambda: deque(maxlen=PING_WINDOW))
    pending_pings: dict[int, int] = field(default_factory=dict)  # ping seq -> t0
    last_ping_at: int = 0
    out_seq: int = 0
    ping_seq: int = 0

    def next_out_seq(self) -> int:
        self.out_seq += 1
        return self.out_seq

    def offset_int(self) -> int:
        return 0 if self.clock_offset is None else round(self.clock_offset)


@dataclass(frozen=True)
class DispatchResult:
    frames: tuple[tuple[str, dict], ...]  # (device_id, wire message)
    undeliverable: tuple[dict, ...]
    error: str | None = None


class GatewayCore:
    def __init__(self, script: ShowScript, config: GatewayConfig | None = None):
        self.script = script
        self.config = config or GatewayConfig()
        self.sessions: dict[str, DeviceSession] = {}
        self.tracker = PoseTracker(
            colliders=script.colliders,
            roles={d.id: d.role for d in script.roster},
        )
        self._seq = 0

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _event(self, at: int, kind: str, **fields) -> Event:
        return Event(seq=self.next_seq(), at=at, kind=kind, **fields)

    # -- registration / liveness --------------------------------------------

    def register_device(self, hello: dict, now: int) -> tuple[DeviceSession, list[Event]]:
        """Create or replace a session from a hello message.

        Returns the session plus the DeviceJoined event to feed the engine
        (none for operators, which are not show devices).
        """
        device_id = str(hello.get("device_id", ""))
        role = str(hello.get("role", ""))
        if role not in (ROLE_HMD, ROLE_WEARABLE, ROLE_OPERATOR):
            raise GatewayError(E_UNKNOWN_ROLE, f"unknown role {role!r}")
        if role != ROLE_OPERATOR:
            decl = self.script.device(device_id)
            if decl is None or decl.role != role:
                raise GatewayError(
                    E_ROSTER_MISMATCH,
                    f"{device_id!r} is not a roster {role}",
                )
        session = DeviceSession(device_id=device_id, role=role, last_heartbeat_at=now)
        self.sessions[device_id] = session
        events: list[Event] = []
        if role != ROLE_OPERATOR:
            events.append(self._event(now, EV_JOINED, device=device_id))
        return session, events

    def disconnect(self, device_id: str, now: int) -> list[Event]:
        """Clean connection teardown (socket closed)."""
        session = self.sessions.get(device_id)
        if session is None or not session.connected:
            return []
        session.connected = False
        if session.role == ROLE_OPERATOR:
            return []
        return [self._event(now, EV_LEFT, device=device_id)]

    def liveness_sweep(self, now: int) -> list[Event]:
        """Flag silently stale sessions; one DeviceLeft per transition."""
        events: list[Event] = []
        for device_id in sorted(self.sessions):
            session = self.sessions[device_id]
            if not session.connected or session.degraded:
                continue
            if now - session.last_heartbeat_at > self.config.stale_after_ms:
                session.degraded = True
                session.connected = False
                if session.role != ROLE_OPERATOR:
                    events.append(self._event(now, EV_LEFT, device=device_id))
        return events

    # -- clock sync ------------------------------------------------------------

    def make_ping(self, session: DeviceSession, now: int) -> dict:
        session.ping_seq += 1
        session.pending_pings[session.ping_seq] = now
        session.last_ping_at = now
        return {
            "type": "ping",
            "seq": session.next_out_seq(),
            "ts": now,
            "ping": session.ping_seq,
            "t0": now,
        }

    def on_pong(self, session: DeviceSession, msg: dict, t3: int) -> None:
        t0 = session.pending_pings.pop(int(msg.get("ping", 0)), None)
        if t0 is None:
            return
        try:
            t1 = int(msg["t1"])
            t2 = int(msg["t2"])
        except (KeyError, TypeError, ValueError):
            return
        session.samples.append(PingSample(t0, t1, t2, t3))
        offset, confidence = estimate_clock_offset(list(session.samples))
        session.clock_offset = offset
        session.offset_confidence = confidence

    # -- inbound routing ---------------------------------------------------------

    def route_inbound(
        self, session: DeviceSession, msg: dict, now: int
    ) -> tuple[list[Event], list[dict]]:
        """Map one protocol message to engine events.

        Returns (events, ignored records).  Exactly one of the lists is
        non-empty for payload messages; both are empty for plumbing
        (heartbeat, pong, ack).
        """
        session.last_heartbeat_at = now  # any traffic proves liveness
        mtype = msg.get("type")

        if mtype == "heartbeat":
            if session.degraded:
                # came back without a new hello: treat as a rejoin
                session.degraded = False
                session.connected = True
                if session.role != ROLE_OPERATOR:
                    return [self._event(now, EV_JOINED, device=session.device_id)], []
            return [], []
        if mtype == "pong":
            self.on_pong(session, msg, now)
            return [], []
        if mtype == "ack":
            return [], []

        if mtype == "button":
            if session.role != ROLE_WEARABLE:
                return [], [self._ignored(now, session, "button from non-wearable")]
            return [
                self._event(
                    now, EV_BUTTON, device=session.device_id, button=str(msg.get("button", ""))
                )
            ], []
        if mtype == "media_ended":
            if session.role != ROLE_HMD:
                return [], [self._ignored(now, session, "media_ended from non-hmd")]
            return [
                self._event(
                    now,
                    EV_MEDIA_ENDED,
                    device=session.device_id,
                    asset=str(msg.get("asset", "")),
                    cue=str(msg.get("cue", "")),
                )
            ], []
        if mtype == "pose":
            try:
                p = (float(msg["x"]), float(msg["y"]), float(msg["z"]))
            except (KeyError, TypeError, ValueError):
                return [], [self._ignored(now, session, "pose with bad coordinates")]
            transitions = self.tracker.update_pose(session.device_id, p, now)
            return [
                self._event(
                    now,
                    EV_COLLIDER,
                    device=t.device,
                    collider=t.collider,
                    direction=t.direction,
                )
                for t in transitions
            ], []
        if mtype == "cmd":
            if session.role != ROLE_OPERATOR:
                return [], [self._ignored(now, session, "cmd from non-operator")]
            cmd = OperatorCmd(
                kind=str(msg.get("cmd", "")),
                cue_id=str(msg.get("cue_id", "")),
                scene_id=str(msg.get("scene_id", "")),
            )
            return [self._event(now, EV_OP, cmd=cmd)], []

        return [], [self._ignored(now, session, f"unknown message type {mtype!r}")]

    def _ignored(self, now: int, session: DeviceSession, reason: str) -> dict:
        return {
            "rec": "ignored",
            "at": now,
            "where": "gateway",
            "device": session.device_id,
            "reason": reason,
        }

    # -- outbound dispatch -----------------------------------------------------

    def dispatch_command(self, cmd: Command, now: int) -> DispatchResult:
        if cmd.kind in (CMD_START_MEDIA, CMD_STOP_MEDIA):
            targets = cmd.targets
        else:
            targets = (cmd.device,)

        frames: list[tuple[str, dict]] = []
        undeliverable: list[dict] = []
        for device_id in targets:
            session = self.sessions.get(device_id)
            if session is None or not session.connected:
                undeliverable.append(
                    {
                        "rec": "undeliverable",
                        "at": now,
                        "cmd_seq": cmd.seq,
                        "kind": cmd.kind,
                        "device": device_id,
                    }
                )
                continue
            frames.append((device_id, self._frame_for(cmd, session, now)))
        error = E_NO_TARGETS if not frames else None
        return DispatchResult(tuple(frames), tuple(undeliverable), error)

    def _frame_for(self, cmd: Command, session: DeviceSession, now: int) -> dict:
        msg: dict = {"type": cmd.kind, "seq": session.next_out_seq(), "ts": now}
        if cmd.cue:
            msg["cue"] = cmd.cue
        if cmd.kind == CMD_START_MEDIA:
            msg["asset"] = cmd.asset
            # the device seeks/starts on its own clock
            msg["start_at"] = cmd.start_at + session.offset_int()
            msg["seek_offset_ms"] = cmd.seek_offset_ms
        elif cmd.kind == CMD_STOP_MEDIA:
            msg["asset"] = cmd.asset
        elif cmd.kind == CMD_BUZZ:
            msg["pattern"] = cmd.pattern
        elif cmd.kind == CMD_SNAPSHOT:
            msg["payload"] = cmd.payload.to_dict() if cmd.payload else None
        return msg

    # -- introspection ---------------------------------------------------------

    def sessions_summary(self, now: int) -> list[dict]:
        out = []
        for device_id in sorted(self.sessions):
            s = self.sessions[device_id]
            out.append(
                {
                    "device_id": s.device_id,
                    "role": s.role,
                    "connected": s.connected,
                    "degraded": s.degraded,
                    "heartbeat_age_ms": max(now - s.last_heartbeat_at, 0),
                    "clock_offset_ms": s.clock_offset,
                    "offset_confidence_ms": s.offset_confidence,
                }
            )
        return out
