"""Deterministic discrete-event simulation of a full show.

Virtual devices from a scenario run against the real engine and gateway on
a simulated clock: no sockets, no sleeping, no wall time.  All randomness
(network jitter, media-end drops) comes from one seeded generator, and the
event queue breaks time ties by insertion order, so a (scenario, seed) pair
always produces a byte-identical run log.

Model notes, chosen for determinism rather than fidelity:

* disconnect is a clean teardown (the gateway sees the socket close), so
  DeviceLeft is immediate; the silent-stale path is exercised by unit tests.
* a disconnected device freezes playback and drops its scheduled
  media_ended reports; on reconnect the engine's snapshot tells it where to
  resume, which is exactly the late-join recovery being tested.
* messages in flight when a device disconnects are dropped.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from . import engine as eng
from .engine import Command, EngineConfig, EngineState, Event
from .gateway import E_ROSTER_MISMATCH, DeviceSession, GatewayCore, GatewayError
from .metrics import RunReport, compute_metrics
from .model import CueGraph, ShowScript
from .runlog import dump_record, event_record, meta_record
from .scenario import FIDELITY_DELAY, FIDELITY_DROP, DeviceSpec, Scenario

POSE_PERIOD_MS = 200  # 5 Hz client-side sampling
PING_EVERY_MS = 10_000
HARD_CAP_MS = 4 * 3600 * 1000

OPERATOR_ID = "op-console"


@dataclass
class SimResult:
    records: list[dict]
    report: RunReport
    state: EngineState

    def log_lines(self) -> list[str]:
        return [dump_record(rec) for rec in self.records]


@dataclass
class _VirtualDevice:
    spec: DeviceSpec
    role: str
    sim: "Simulation"
    connected: bool = False
    out_seq: int = 0
    play_gen: dict[tuple[str, str], int] = field(default_factory=dict)  # (cue, asset) -> gen
    gen_counter: int = 0
    buzzes: list[dict] = field(default_factory=list)
    snapshots: list[dict] = field(default_factory=list)

    @property
    def clock_offset(self) -> int:
        return self.spec.clock_offset_ms

    def next_seq(self) -> int:
        self.out_seq += 1
        return self.out_seq

    def send(self, msg: dict) -> None:
        if not self.connected:
            return
        msg = dict(msg)
        msg["seq"] = self.next_seq()
        msg["ts"] = self.sim.now + self.clock_offset
        self.sim.to_server(self.spec.id, msg)

    # -- inbound frames ------------------------------------------------------

    def on_frame(self, msg: dict) -> None:
        if not self.connected:
            return  # arrived after the socket dropped
        mtype = msg.get("type")
        if mtype == "start_media":
            self._start_media(
                cue=msg.get("cue", ""),
                asset=msg.get("asset", ""),
                device_start_at=int(msg.get("start_at", self.sim.now)),
                seek=int(msg.get("seek_offset_ms", 0)),
            )
        elif mtype == "stop_media":
            asset = msg.get("asset", "")
            for key in list(self.play_gen):
                if key[1] == asset:
                    del self.play_gen[key]
        elif mtype == "buzz":
            self.buzzes.append({"at": self.sim.now, "pattern": msg.get("pattern", "")})
        elif mtype == "snapshot":
            payload = msg.get("payload") or {}
            self.snapshots.append({"at": self.sim.now, "payload": payload})
            for m in payload.get("media", []):
                self._start_media(
                    cue=m.get("cue", ""),
                    asset=m.get("asset", ""),
                    device_start_at=self.sim.now + self.clock_offset,
                    seek=int(m.get("seek_offset_ms", 0)),
                )
        elif mtype == "ping":
            pong = {
                "type": "pong",
                "ping": msg.get("ping", 0),
                "t1": self.sim.now + self.clock_offset,
                "t2": self.sim.now + self.clock_offset,
            }
            self.send(pong)

    def _start_media(self, cue: str, asset: str, device_start_at: int, seek: int) -> None:
        duration = self.sim.asset_durations.get(asset, 0)
        remaining = max(duration - seek, 0)
        true_start = max(device_start_at - self.clock_offset, self.sim.now)
        end_at = true_start + remaining
        self.gen_counter += 1
        gen = self.gen_counter
        self.play_gen[(cue, asset)] = gen

        fidelity = self.spec.media
        if fidelity.kind == FIDELITY_DROP and self.sim.rng.random() < fidelity.p:
            return  # the report never leaves the device
        if fidelity.kind == FIDELITY_DELAY:
            end_at += fidelity.delay_ms

        def report() -> None:
            if self.play_gen.get((cue, asset)) == gen and self.connected:
                del self.play_gen[(cue, asset)]
                self.send({"type": "media_ended", "asset": asset, "cue": cue})

        self.sim.push(end_at, report)

    # -- connection lifecycle ----------------------------------------------------

    def join(self) -> None:
        if self.connected:
            return
        self.connected = True
        hello = {
            "type": "hello",
            "seq": self.next_seq(),
            "ts": self.sim.now + self.clock_offset,
            "device_id": self.spec.id,
            "role": self.role,
        }
        session, events = self.sim.gateway.register_device(hello, self.sim.now)
        self.sim.ping_exchange(session, self, rounds=8)
        self.sim.feed_events(events)

    def disconnect(self) -> None:
        if not self.connected:
            return
        self.connected = False
        self.play_gen.clear()  # playback freezes without the server
        self.sim.feed_events(self.sim.gateway.disconnect(self.spec.id, self.sim.now))


class Simulation:
    def __init__(
        self,
        scenario: Scenario,
        script: ShowScript,
        graph: CueGraph,
        seed: int | None = None,
        config: EngineConfig | None = None,
    ):
        self.scenario = scenario
        self.script = script
        self.graph = graph
        self.seed = scenario.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        self.config = config or EngineConfig()
        self.gateway = GatewayCore(script)
        self.asset_durations = {a.id: a.duration_ms for a in script.assets}
        self.records: list[dict] = []
        self.queue: list[tuple[int, int, object]] = []
        self._counter = 0
        self.now = 0
        self.stopped = False
        self._wakeups: set[int] = set()
        self.state: EngineState | None = None
        self.cap = min(
            scenario.end_at if scenario.end_at is not None else HARD_CAP_MS, HARD_CAP_MS
        )

        roster = {d.id: d.role for d in script.roster}
        for spec in scenario.devices:
            if spec.id not in roster:
                raise GatewayError(
                    E_ROSTER_MISMATCH, f"scenario device {spec.id!r} not in script roster"
                )
        self.devices = {
            spec.id: _VirtualDevice(spec, roster[spec.id], self) for spec in scenario.devices
        }

    # -- plumbing ----------------------------------------------------------------

    def push(self, t: int, fn) -> None:
        self._counter += 1
        heapq.heappush(self.queue, (max(t, self.now), self._counter, fn))

    def net_delay(self) -> int:
        base = self.scenario.net_delay_ms
        jitter = self.scenario.net_jitter_ms
        return base + (self.rng.randrange(jitter + 1) if jitter > 0 else 0)

    def to_server(self, device_id: str, msg: dict) -> None:
        def deliver() -> None:
            session = self.gateway.sessions.get(device_id)
            if session is None or not session.connected:
                return  # packet lost with the connection
            events, ignored = self.gateway.route_inbound(session, msg, self.now)
            self.records.extend(ignored)
            self.feed_events(events)

        self.push(self.now + self.net_delay(), deliver)

    def ping_exchange(self, session: DeviceSession, device: _VirtualDevice, rounds: int) -> None:
        """Registration burst: synchronous ping/pong exchanges.

        Modeled inline (no queue round trips) but drawing per-leg delays from
        the rng, so jitter shapes the sample set exactly as it would on the
        wire.
        """
        for _ in range(rounds):
            d1 = self.net_delay()
            d2 = self.net_delay()
            ping = self.gateway.make_ping(session, self.now)
            t1 = self.now + d1 + device.clock_offset
            pong = {"type": "pong", "ping": ping["ping"], "t1": t1, "t2": t1}
            self.gateway.on_pong(session, pong, self.now + d1 + d2)

    def _ping_round(self, device_id: str) -> None:
        if self.stopped:
            return
        device = self.devices[device_id]
        session = self.gateway.sessions.get(device_id)
        if device.connected and session is not None and session.connected:
            self.ping_exchange(session, device, rounds=1)
        nxt = self.now + PING_EVERY_MS
        if nxt <= self.cap:
            self.push(nxt, lambda: self._ping_round(device_id))

    # -- engine interaction ------------------------------------------------------

    def _drain_journal(self) -> None:
        assert self.state is not None
        for entry in self.state.drain_journal():
            self.records.append(entry.to_dict() if isinstance(entry, Command) else entry)

    def feed_events(self, events: list[Event]) -> None:
        assert self.state is not None
        for event in events:
            self.records.append(event_record(event))
            _, commands = eng.handle_event(self.state, event)
            self._drain_journal()
            self.dispatch(commands)
        self._schedule_wakeup()
        self._check_done()

    def dispatch(self, commands: list[Command]) -> None:
        for cmd in commands:
            result = self.gateway.dispatch_command(cmd, self.now)
            for device_id, msg in result.frames:
                rec = {
                    "rec": "dispatch",
                    "at": self.now,
                    "cmd_seq": cmd.seq,
                    "device": device_id,
                    "type": msg["type"],
                }
                if "start_at" in msg:
                    rec["device_start_at"] = msg["start_at"]
                self.records.append(rec)
                device = self.devices.get(device_id)
                if device is not None:
                    self.push(
                        self.now + self.net_delay(),
                        (lambda d, m: lambda: d.on_frame(m))(device, msg),
                    )
            self.records.extend(result.undeliverable)
            if result.error:
                self.records.append(
                    {"rec": "dispatch_error", "at": self.now, "cmd_seq": cmd.seq, "error": result.error}
                )

    def _schedule_wakeup(self) -> None:
        assert self.state is not None
        if not self.state.timers or self.state.held:
            return
        nxt = min(t.fire_at for t in self.state.timers)
        nxt = max(nxt, self.now)
        if nxt <= self.cap and nxt not in self._wakeups:
            self._wakeups.add(nxt)
            self.push(nxt, lambda: self._on_wakeup(nxt))

    def _on_wakeup(self, t: int) -> None:
        self._wakeups.discard(t)
        if self.stopped:
            return
        assert self.state is not None
        _, commands = eng.tick(self.state, t)
        self._drain_journal()
        self.dispatch(commands)
        self._schedule_wakeup()
        self._check_done()

    def _check_done(self) -> None:
        assert self.state is not None
        if self.stopped:
            return
        if all(st in eng.RESOLVED for st in self.state.cue_states.values()):
            self.stopped = True

    # -- schedule construction --------------------------------------------------

    def _schedule_device(self, device: _VirtualDevice) -> None:
        spec = device.spec
        self.push(spec.join_at, device.join)
        self.push(spec.join_at + PING_EVERY_MS, lambda: self._ping_round(spec.id))
        for at, button in spec.presses:
            self.push(at, (lambda b: lambda: device.send({"type": "button", "button": b}))(button))
        for at, x, y, z in _pose_samples(spec.path):
            self.push(
                at,
                (lambda px, py, pz: lambda: device.send(
                    {"type": "pose", "x": px, "y": py, "z": pz}
                ))(x, y, z),
            )
        for d0, d1 in spec.drops:
            self.push(d0, device.disconnect)
            self.push(d1, device.join)

    def _schedule_operator(self) -> None:
        hello = {
            "type": "hello",
            "seq": 1,
            "ts": 0,
            "device_id": OPERATOR_ID,
            "role": "operator",
        }
        session, _ = self.gateway.register_device(hello, 0)

        def send_cmd(cmd) -> None:
            msg = {
                "type": "cmd",
                "seq": session.next_out_seq(),
                "ts": self.now,
                "cmd": cmd.kind,
                "cue_id": cmd.cue_id,
                "scene_id": cmd.scene_id,
            }

            def deliver() -> None:
                events, ignored = self.gateway.route_inbound(session, msg, self.now)
                self.records.extend(ignored)
                self.feed_events(events)

            self.push(self.now + self.net_delay(), deliver)

        for action in self.scenario.operator:
            self.push(action.at, (lambda c: lambda: send_cmd(c))(action.cmd))

    # -- run -----------------------------------------------------------------

    def run(self) -> SimResult:
        self.records.append(
            meta_record(
                script_path=self.scenario.script_path,
                scenario_path=self.scenario.source_path or self.scenario.name,
                title=self.script.title,
                seed=self.seed,
                start_at=0,
                config=self.config,
            )
        )
        self.state, commands = eng.init_engine(self.graph, 0, self.config)
        self._drain_journal()
        self.dispatch(commands)
        self._schedule_wakeup()

        self._schedule_operator()
        for device in self.devices.values():
            self._schedule_device(device)

        while self.queue and not self.stopped:
            t, _, fn = heapq.heappop(self.queue)
            if t > self.cap:
                break
            self.now = t
            fn()

        # close the log: one final clock advance so replay sees the same end
        end_event = Event(seq=self.gateway.next_seq(), at=self.now, kind=eng.EV_RUN_END)
        self.records.append(event_record(end_event))
        eng.handle_event(self.state, end_event)
        self._drain_journal()
        self.records.append(
            {
                "rec": "final",
                "at": self.now,
                "cues": dict(sorted(self.state.cue_states.items())),
                "ended": self.state.ended,
            }
        )
        report = compute_metrics(self.records, self.scenario)
        return SimResult(records=self.records, report=report, state=self.state)


def _pose_samples(
    path: tuple[tuple[int, float, float, float], ...]
) -> list[tuple[int, float, float, float]]:
    """5 Hz samples along a piecewise-linear waypoint path."""
    if not path:
        return []
    pts = sorted(path, key=lambda w: w[0])
    if len(pts) == 1:
        return [pts[0]]
    out: list[tuple[int, float, float, float]] = []
    t = pts[0][0]
    end = pts[-1][0]
    seg = 0
    while t <= end:
        while seg < len(pts) - 2 and t > pts[seg + 1][0]:
            seg += 1
        t0, x0, y0, z0 = pts[seg]
        t1, x1, y1, z1 = pts[seg + 1]
        f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        f = min(max(f, 0.0), 1.0)
        out.append((t, x0 + f * (x1 - x0), y0 + f * (y1 - y0), z0 + f * (z1 - z0)))
        t += POSE_PERIOD_MS
    return out


def run_scenario(
    scenario: Scenario,
    script: ShowScript,
    graph: CueGraph,
    seed: int | None = None,
    config: EngineConfig | None = None,
) -> SimResult:
    return Simulation(scenario, script, graph, seed=seed, config=config).run()
