"""WebSocket service: one session per connection, envelopes out, commands in.

The wire format is exactly the headless log format, one JSON envelope per
message, prefixed by a hello handshake. Inbound messages are the same
command objects walk scripts use; a malformed line costs one error
envelope and the stream continues.
"""

from __future__ import annotations

import asyncio
import json
from contextlib import asynccontextmanager

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .config import SessionConfig
from .session import PROTOCOL_VERSION, Session, first_launch_flag_path
from .simulator import Scene


class ServiceError(RuntimeError):
    """The service could not start (typically: port already bound)."""


def _session_for_connection(config: SessionConfig, scene: Scene) -> Session:
    first_launch = True
    if config.calibration_store_path:
        flag = first_launch_flag_path(config.calibration_store_path)
        first_launch = not flag.exists()
        if first_launch:
            flag.write_text("seen\n", encoding="utf-8")
    return Session(config, scene, first_launch=first_launch)


async def _flush(ws, session: Session, cursor: int) -> int:
    while cursor < len(session.log):
        await ws.send(session.log[cursor].to_json())
        cursor += 1
    return cursor


async def _read_commands(ws, inbound: list[dict], session: Session) -> None:
    try:
        async for message in ws:
            try:
                command = json.loads(message)
            except json.JSONDecodeError as exc:
                session.emit_error(f"malformed command: {exc.msg}")
                continue
            inbound.append(command)
    except ConnectionClosed:
        pass


async def _handle_connection(ws, config: SessionConfig, scene: Scene) -> None:
    session = _session_for_connection(config, scene)
    session.emit(
        "hello", {"protocol_version": PROTOCOL_VERSION, "config_summary": config.summary()}
    )
    session.start()
    inbound: list[dict] = []
    reader = asyncio.ensure_future(_read_commands(ws, inbound, session))
    cursor = 0
    tick_s = session.tick_ms / 1000.0
    try:
        cursor = await _flush(ws, session, cursor)
        while not reader.done() or inbound:
            await asyncio.sleep(tick_s)
            commands, inbound[:] = list(inbound), []
            session.tick(commands)
            cursor = await _flush(ws, session, cursor)
    except ConnectionClosed:
        pass
    finally:
        reader.cancel()


@asynccontextmanager
async def running_service(config: SessionConfig, scene: Scene, host: str = "127.0.0.1"):
    """Async context manager yielding a live server; port 0 picks a free one."""

    async def handler(ws):
        await _handle_connection(ws, config, scene)

    try:
        server = await ws_serve(handler, host, config.port)
    except OSError as exc:
        raise ServiceError(f"cannot listen on {host}:{config.port}: {exc}") from exc
    try:
        yield server
    finally:
        server.close()
        await server.wait_closed()


def bound_port(server) -> int:
    return server.sockets[0].getsockname()[1]


async def serve_forever(config: SessionConfig, scene: Scene, host: str = "127.0.0.1") -> None:
    async with running_service(config, scene, host) as server:
        print(f"listening on ws://{host}:{bound_port(server)}", flush=True)
        await asyncio.Future()


def serve(config: SessionConfig, scene: Scene, host: str = "127.0.0.1") -> None:
    """Blocking entry point; returns on Ctrl+C."""
    try:
        asyncio.run(serve_forever(config, scene, host))
    except KeyboardInterrupt:
        pass
