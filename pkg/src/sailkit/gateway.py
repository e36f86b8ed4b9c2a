"""Network edge for human participation: bridges WebSocket clients into the
router as the operator, and exposes state, trace, and config endpoints.

Live frames are queued and injected at the next tick boundary, on exactly the
same path as scripted operator input, so live and scripted runs of identical
inputs produce identical traces.  With ``tick_rate`` 0 the scheduler is
stepped explicitly via ``POST /api/tick`` (deterministic mode); otherwise a
background loop free-runs at the configured rate.
"""

from __future__ import annotations

import asyncio
import json
from collections import deque
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .agents import OperatorProxy
from .bus import Bus, BusError
from .hatcl import HatclError, decode_wire_object, encode_message
from .scenario import Scenario, build_runtime

CLOSE_SESSION_CONFLICT = 4001
CLOSE_INVALID_MESSAGE = 4002

_PLACEHOLDER = """<!doctype html>
<html><head><title>operator console</title></head>
<body><h1>Operator gateway</h1>
<p>No console build found. The API is live: WS <code>/hatcl</code>,
GET <code>/api/state</code>, <code>/api/trace</code>, <code>/api/scenario</code>.</p>
</body></html>"""


class OperatorSession:
    """One live connection for one human actor, with a pending-delivery
    queue that survives reconnects."""

    def __init__(self, actor_id: str) -> None:
        self.actor_id = actor_id
        self.websocket: Optional[WebSocket] = None
        self.pending: deque[str] = deque()

    async def flush(self) -> None:
        while self.pending and self.websocket is not None:
            frame = self.pending[0]
            try:
                await self.websocket.send_text(frame)
            except Exception:
                self.websocket = None
                return
            self.pending.popleft()


class Gateway:
    def __init__(
        self,
        scenario: Scenario,
        seed: Optional[int] = None,
        script: Optional[list[dict]] = None,
        tick_rate: float = 0.0,
        tick_limit: Optional[int] = None,
    ) -> None:
        self.scenario = scenario
        self.bus: Bus = build_runtime(scenario, seed=seed)
        if script:
            self.bus.inject_script(script)
        self.tick_rate = tick_rate
        self.tick_limit = tick_limit
        self.sessions: dict[str, OperatorSession] = {}
        proxy = self.bus.components.get(self.bus.operator_id)
        if isinstance(proxy, OperatorProxy):
            proxy.on_message = self._queue_for_operator

    def _queue_for_operator(self, msg) -> None:
        session = self.sessions.get(self.bus.operator_id)
        if session is not None:
            session.pending.append(encode_message(msg))

    def session_for(self, actor_id: str) -> OperatorSession:
        if actor_id not in self.sessions:
            self.sessions[actor_id] = OperatorSession(actor_id)
        return self.sessions[actor_id]

    def step(self, count: int = 1) -> int:
        for _ in range(count):
            if self.tick_limit is not None and self.bus.tick >= self.tick_limit:
                break
            self.bus.step_tick()
        return self.bus.tick

    async def flush_all(self) -> None:
        for session in self.sessions.values():
            await session.flush()

    def state_snapshot(self) -> dict:
        return {
            "tick": self.bus.tick,
            "world": self.bus.world.snapshot() if self.bus.world else None,
            "roster": {
                actor_id: {
                    "category": d.category,
                    "capabilities": list(d.capabilities),
                }
                for actor_id, d in sorted(self.bus.roster.items())
            },
            "agreements": self.bus.engine.snapshot(),
        }


def create_app(
    scenario: Scenario,
    seed: Optional[int] = None,
    script: Optional[list[dict]] = None,
    tick_rate: float = 0.0,
    tick_limit: Optional[int] = None,
    console_dir: Optional[Path] = None,
) -> FastAPI:
    gateway = Gateway(scenario, seed=seed, script=script,
                      tick_rate=tick_rate, tick_limit=tick_limit)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = None
        if gateway.tick_rate > 0:
            task = asyncio.create_task(_tick_loop(gateway))
        yield
        if task is not None:
            task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.gateway = gateway

    @app.websocket("/hatcl")
    async def hatcl_socket(websocket: WebSocket):
        actor_id = websocket.query_params.get("actor", gateway.bus.operator_id)
        await websocket.accept()
        session = gateway.session_for(actor_id)
        if session.websocket is not None:
            await websocket.close(code=CLOSE_SESSION_CONFLICT)
            return
        session.websocket = websocket
        await session.flush()
        try:
            while True:
                text = await websocket.receive_text()
                try:
                    msg = decode_wire_object(json.loads(text))
                    gateway.bus.enqueue_external(msg)
                except (ValueError, HatclError, BusError):
                    await websocket.close(code=CLOSE_INVALID_MESSAGE)
                    return
        except WebSocketDisconnect:
            pass
        finally:
            if session.websocket is websocket:
                session.websocket = None

    @app.get("/api/state")
    async def api_state():
        return gateway.state_snapshot()

    @app.get("/api/trace")
    async def api_trace():
        return PlainTextResponse(
            gateway.bus.trace.to_jsonl(), media_type="application/x-ndjson"
        )

    @app.get("/api/scenario")
    async def api_scenario():
        return gateway.scenario.doc

    @app.post("/api/tick")
    async def api_tick(count: int = 1):
        tick = gateway.step(count)
        await gateway.flush_all()
        return {"tick": tick}

    if console_dir is not None and console_dir.is_dir():
        app.mount("/", StaticFiles(directory=console_dir, html=True),
                  name="console")
    else:

        @app.get("/")
        async def index():
            return HTMLResponse(_PLACEHOLDER)

    return app


async def _tick_loop(gateway: Gateway) -> None:
    period = 1.0 / gateway.tick_rate
    while gateway.tick_limit is None or gateway.bus.tick < gateway.tick_limit:
        gateway.step(1)
        await gateway.flush_all()
        await asyncio.sleep(period)
