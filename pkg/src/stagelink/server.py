"""Live show server: HTTP control surface plus TCP device gateway.

Everything stateful funnels through one asyncio.Lock, mirroring the single
serialization point the engine requires.  Devices speak the length-prefixed
frame protocol over TCP; operators speak JSON over HTTP:

    GET  /state         engine view (scenes, cue states, hold flag)
    GET  /devices       session table with clock offsets and liveness
    POST /cmd           operator command {"cmd": ..., "cue_id"/"scene_id"}
    GET  /log?since=N   run log lines from index N (ndjson)
    GET  /stream?since=N  same records as server-sent events, then live

The run log lines served here are exactly what `replay` consumes.
"""

from __future__ import annotations

import asyncio
import contextlib
import time

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from . import engine as eng
from .config import ServerConfig
from .engine import Command, EngineError, EngineState, OperatorCmd
from .framing import FrameDecoder, FrameError, encode_frame
from .gateway import PING_INTERVAL_MS, PINGS_AT_REGISTRATION, GatewayCore, GatewayError
from .model import ROLE_OPERATOR, CueGraph, ShowScript
from .runlog import dump_record, event_record, meta_record

OP_KINDS = (eng.OP_FIRE, eng.OP_SKIP, eng.OP_HOLD, eng.OP_RESUME, eng.OP_JUMP)

_HTTP_STATUS = {
    eng.E_UNKNOWN_CUE: 404,
    eng.E_UNKNOWN_SCENE: 404,
    eng.E_ALREADY_COMPLETED: 409,
    eng.E_STALE_SEQ: 409,
}


class ShowServer:
    def __init__(self, script: ShowScript, graph: CueGraph, config: ServerConfig,
                 script_path: str = "<script>"):
        self.script = script
        self.graph = graph
        self.cfg = config
        self.script_path = script_path
        self.gateway = GatewayCore(script, config.gateway_config())
        self.state: EngineState | None = None
        self.records: list[dict] = []
        self.lines: list[str] = []
        self.lock = asyncio.Lock()
        self.writers: dict[str, asyncio.StreamWriter] = {}
        self.subscribers: set[asyncio.Queue] = set()
        self._t0 = time.monotonic()
        self._log_fh = open(config.log_path, "a", encoding="utf-8") if config.log_path else None

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)

    # -- record plumbing -------------------------------------------------------

    def _append(self, rec: dict) -> None:
        index = len(self.lines)
        line = dump_record(rec)
        self.records.append(rec)
        self.lines.append(line)
        if self._log_fh is not None:
            self._log_fh.write(line + "\n")
            self._log_fh.flush()
        for queue in self.subscribers:
            queue.put_nowait((index, line))

    def _drain_journal(self) -> None:
        assert self.state is not None
        for entry in self.state.drain_journal():
            self._append(entry.to_dict() if isinstance(entry, Command) else entry)

    async def _send_frame(self, device_id: str, msg: dict) -> None:
        writer = self.writers.get(device_id)
        if writer is None:
            return
        try:
            writer.write(encode_frame(msg))
            await writer.drain()
        except (ConnectionError, RuntimeError):
            pass  # the reader loop will notice and tear the session down

    async def _dispatch(self, commands: list[Command]) -> None:
        now = self.now_ms()
        for cmd in commands:
            result = self.gateway.dispatch_command(cmd, now)
            for device_id, msg in result.frames:
                rec = {
                    "rec": "dispatch",
                    "at": now,
                    "cmd_seq": cmd.seq,
                    "device": device_id,
                    "type": msg["type"],
                }
                if "start_at" in msg:
                    rec["device_start_at"] = msg["start_at"]
                self._append(rec)
                await self._send_frame(device_id, msg)
            for rec in result.undeliverable:
                self._append(rec)
            if result.error:
                self._append(
                    {"rec": "dispatch_error", "at": now, "cmd_seq": cmd.seq, "error": result.error}
                )

    async def _process_events(self, events, ignored=()) -> None:
        """Feed gateway output to the engine.  Caller must hold the lock."""
        for rec in ignored:
            self._append(rec)
        for event in events:
            self._append(event_record(event))
            _, commands = eng.handle_event(self.state, event)
            self._drain_journal()
            await self._dispatch(commands)

    # -- lifecycle ----------------------------------------------------------

    async def start(self) -> None:
        async with self.lock:
            config = self.cfg.engine_config()
            self._append(
                meta_record(
                    script_path=self.script_path,
                    title=self.script.title,
                    seed=0,
                    start_at=self.now_ms(),
                    config=config,
                )
            )
            self.state, commands = eng.init_engine(self.graph, self.now_ms(), config)
            self._drain_journal()
            await self._dispatch(commands)

    async def close(self) -> None:
        for writer in list(self.writers.values()):
            writer.close()
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    async def tick_loop(self) -> None:
        while True:
            await asyncio.sleep(self.cfg.tick_ms / 1000)
            async with self.lock:
                now = self.now_ms()
                _, commands = eng.tick(self.state, now)
                self._drain_journal()
                await self._dispatch(commands)
                await self._process_events(self.gateway.liveness_sweep(now))
                for device_id in sorted(self.gateway.sessions):
                    session = self.gateway.sessions[device_id]
                    if (
                        session.connected
                        and session.role != ROLE_OPERATOR
                        and now - session.last_ping_at >= PING_INTERVAL_MS
                    ):
                        await self._send_frame(device_id, self.gateway.make_ping(session, now))

    # -- device connections --------------------------------------------------

    async def handle_device(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        decoder = FrameDecoder()
        device_id: str | None = None
        try:
            while True:
                data = await reader.read(4096)
                if not data:
                    break
                for item in decoder.feed(data):
                    if isinstance(item, FrameError):
                        async with self.lock:
                            self._append(
                                {
                                    "rec": "ignored",
                                    "at": self.now_ms(),
                                    "where": "framing",
                                    "device": device_id or "",
                                    "reason": f"{item.code} {item.message}",
                                }
                            )
                        continue
                    device_id = await self._handle_message(device_id, item, writer)
                if decoder.dead:
                    break
        except ConnectionError:
            pass
        finally:
            if device_id is not None and self.writers.get(device_id) is writer:
                del self.writers[device_id]
                async with self.lock:
                    await self._process_events(
                        self.gateway.disconnect(device_id, self.now_ms())
                    )
            writer.close()

    async def _handle_message(
        self, device_id: str | None, msg: dict, writer: asyncio.StreamWriter
    ) -> str | None:
        async with self.lock:
            now = self.now_ms()
            if device_id is None:
                if msg.get("type") != "hello":
                    self._append(
                        {
                            "rec": "ignored",
                            "at": now,
                            "where": "gateway",
                            "device": str(msg.get("device_id", "")),
                            "reason": "first frame must be hello",
                        }
                    )
                    return None
                try:
                    session, events = self.gateway.register_device(msg, now)
                except GatewayError as exc:
                    await self._send_frame_raw(
                        writer,
                        {"type": "error", "seq": 0, "ts": now, "code": exc.code,
                         "message": exc.message},
                    )
                    return None
                device_id = session.device_id
                self.writers[device_id] = writer
                if session.role != ROLE_OPERATOR:
                    for _ in range(PINGS_AT_REGISTRATION):
                        await self._send_frame(device_id, self.gateway.make_ping(session, now))
                await self._process_events(events)
                return device_id

            session = self.gateway.sessions.get(device_id)
            if session is None:
                return device_id
            events, ignored = self.gateway.route_inbound(session, msg, now)
            await self._process_events(events, ignored)
            return device_id

    async def _send_frame_raw(self, writer: asyncio.StreamWriter, msg: dict) -> None:
        try:
            writer.write(encode_frame(msg))
            await writer.drain()
        except (ConnectionError, RuntimeError):
            pass

    # -- operator entry point ----------------------------------------------------

    async def operator(self, cmd: OperatorCmd) -> dict:
        async with self.lock:
            _, commands = eng.operator_command(self.state, cmd)
            self._drain_journal()
            await self._dispatch(commands)
            return eng.state_summary(self.state)


def create_app(server: ShowServer) -> FastAPI:
    tasks: list[asyncio.Task] = []

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        tcp = await asyncio.start_server(
            server.handle_device, server.cfg.device_host, server.cfg.device_port
        )
        await server.start()
        tasks.append(asyncio.create_task(server.tick_loop()))
        try:
            yield
        finally:
            for task in tasks:
                task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await task
            tcp.close()
            await tcp.wait_closed()
            await server.close()

    app = FastAPI(title="stagelink", lifespan=lifespan)
    # the operator console is served as static files from wherever; let any
    # origin hit the control surface (it already sits on a closed venue LAN)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Log-From", "X-Log-Next"],
    )

    @app.get("/state")
    async def get_state() -> JSONResponse:
        async with server.lock:
            return JSONResponse(eng.state_summary(server.state))

    @app.get("/devices")
    async def get_devices() -> JSONResponse:
        async with server.lock:
            return JSONResponse(
                {"devices": server.gateway.sessions_summary(server.now_ms())}
            )

    @app.post("/cmd")
    async def post_cmd(body: dict) -> JSONResponse:
        kind = body.get("cmd")
        if kind not in OP_KINDS:
            return JSONResponse(
                {"error": "E_SYNTAX", "message": f"unknown cmd {kind!r}"}, status_code=400
            )
        cmd = OperatorCmd(
            kind=kind,
            cue_id=str(body.get("cue_id", "") or ""),
            scene_id=str(body.get("scene_id", "") or ""),
        )
        try:
            summary = await server.operator(cmd)
        except EngineError as exc:
            return JSONResponse(
                {"error": exc.code, "message": exc.message},
                status_code=_HTTP_STATUS.get(exc.code, 400),
            )
        return JSONResponse({"ok": True, "state": summary})

    @app.get("/log")
    async def get_log(since: int = 0) -> PlainTextResponse:
        async with server.lock:
            since = max(0, min(since, len(server.lines)))
            body = "".join(line + "\n" for line in server.lines[since:])
            return PlainTextResponse(
                body,
                media_type="application/x-ndjson",
                headers={"X-Log-From": str(since), "X-Log-Next": str(len(server.lines))},
            )

    @app.get("/stream")
    async def get_stream(since: int = 0) -> StreamingResponse:
        queue: asyncio.Queue = asyncio.Queue()
        async with server.lock:
            backlog = list(enumerate(server.lines))[max(0, since):]
            server.subscribers.add(queue)

        async def gen():
            try:
                for index, line in backlog:
                    yield f"id: {index}\ndata: {line}\n\n"
                while True:
                    index, line = await queue.get()
                    yield f"id: {index}\ndata: {line}\n\n"
            finally:
                server.subscribers.discard(queue)

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app


def run_server(script: ShowScript, graph: CueGraph, config: ServerConfig,
               script_path: str = "<script>") -> None:
    import uvicorn

    server = ShowServer(script, graph, config, script_path=script_path)
    app = create_app(server)
    uvicorn.run(app, host=config.http_host, port=config.http_port, log_level="warning")
