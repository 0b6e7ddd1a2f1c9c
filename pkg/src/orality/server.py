"""WebSocket server: one bidirectional channel per session.

Each connection binds to a session id; inbound messages are processed
strictly in arrival order under a per-session lock (the single writer), and
every outbound event is sent as one newline-free JSON text frame. A timer
task polls the manual-edit debouncer so a finished drag becomes a snapshot
without further input. On connect the client receives the current canvas
and the existing timeline so it can render the scrubber immediately.
"""

from __future__ import annotations

import asyncio
import logging
import time
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import protocol
from .layout import LayoutParams
from .providers import Providers, mock_providers
from .session import Session, session_path
from .stimulation import CONFLICT_REPORT_FLOOR

logger = logging.getLogger(__name__)

DEFAULT_SESSION_ID = "default"


class SessionRegistry:
    """Lazily loads or creates one Session (and its writer lock) per id."""

    def __init__(self, providers: Providers,
                 params: LayoutParams | None = None,
                 session_dir: str | Path | None = None,
                 conflict_floor: int = CONFLICT_REPORT_FLOOR,
                 memo_dir: str | Path | None = None,
                 clock: Callable[[], float] = time.time) -> None:
        self.providers = providers
        self.params = params or LayoutParams()
        self.session_dir = Path(session_dir) if session_dir else None
        self.conflict_floor = conflict_floor
        self.memo_dir = memo_dir
        self.clock = clock
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, asyncio.Lock] = {}

    def get(self, session_id: str) -> Session:
        if session_id in self._sessions:
            return self._sessions[session_id]
        session: Session | None = None
        if self.session_dir is not None:
            path = session_path(self.session_dir, session_id)
            if path.exists():
                session = Session.load(
                    path, self.providers,
                    session_dir=self.session_dir,
                    conflict_floor=self.conflict_floor,
                    memo_dir=self.memo_dir,
                    clock=self.clock,
                )
                logger.info("loaded session %s from %s", session_id, path)
        if session is None:
            session = Session(
                self.providers,
                params=self.params,
                session_id=session_id,
                session_dir=self.session_dir,
                conflict_floor=self.conflict_floor,
                memo_dir=self.memo_dir,
                clock=self.clock,
            )
        self._sessions[session_id] = session
        return session

    def lock(self, session_id: str) -> asyncio.Lock:
        return self._locks.setdefault(session_id, asyncio.Lock())


def create_app(providers: Providers | None = None,
               params: LayoutParams | None = None,
               session_dir: str | Path | None = None,
               conflict_floor: int = CONFLICT_REPORT_FLOOR,
               memo_dir: str | Path | None = None,
               poll_interval: float = 0.25,
               clock: Callable[[], float] = time.time) -> FastAPI:
    registry = SessionRegistry(
        providers or mock_providers(),
        params=params,
        session_dir=session_dir,
        conflict_floor=conflict_floor,
        memo_dir=memo_dir,
        clock=clock,
    )
    app = FastAPI(title="orality")
    app.state.registry = registry

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok"}

    async def send_event(websocket: WebSocket, event: dict) -> None:
        await websocket.send_text(protocol.encode(event["type"], event["payload"]))

    async def serve_session(websocket: WebSocket, session_id: str) -> None:
        await websocket.accept()
        session = registry.get(session_id)
        lock = registry.lock(session_id)

        async with lock:
            await send_event(websocket, session._canvas_update())
            for snapshot in session.doc.timeline.snapshots:
                await send_event(websocket, Session._snapshot_added(snapshot))

        async def poll_debounce() -> None:
            while True:
                await asyncio.sleep(poll_interval)
                async with lock:
                    events = session.poll()
                for event in events:
                    await send_event(websocket, event)

        poller = asyncio.create_task(poll_debounce())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    message = protocol.decode(raw)
                except protocol.ProtocolError as exc:
                    await send_event(
                        websocket, protocol.make_error(exc.code, exc.message))
                    continue
                async with lock:
                    events = await asyncio.to_thread(session.handle_event, message)
                for event in events:
                    await send_event(websocket, event)
        except WebSocketDisconnect:
            pass
        finally:
            poller.cancel()

    @app.websocket("/ws")
    async def ws_default(websocket: WebSocket) -> None:
        await serve_session(websocket, DEFAULT_SESSION_ID)

    @app.websocket("/ws/{session_id}")
    async def ws_named(websocket: WebSocket, session_id: str) -> None:
        await serve_session(websocket, session_id)

    return app
