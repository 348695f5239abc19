"""Network front end for the session core.

Two listeners speak the same newline-delimited JSON protocol: a plain TCP
stream (one JSON object per line) and a WebSocket bridge for browsers (one
JSON object per text frame). Payloads are serialized once, so both
transports emit byte-identical JSON.

Player messages:
    {"t":"join","session":S,"index":I}   {"t":"pos","ms":T,"x":X}   {"t":"quit"}
Server to players:
    {"t":"joined","index":I,"role":R}    {"t":"countdown","s":K}
    {"t":"frame","ms":T,"self":X,"peers":{"J":XJ,...}}
    {"t":"end","reason":"complete"|"abort"}     {"t":"error","reason":R}

Administrator messages (session setup; the GUI wizard's network form):
    {"t":"create","session":S,"config":TEXT,"trial":N,"store_signature":B}
    {"t":"watch","session":S}            {"t":"signatures"}
replied with created/status/done/signatures/error objects.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path

import websockets

from .config import TrialConfig, parse_trial_config
from .core import TrialType, ValidationError
from .session import SessionCore, SessionPhase, SignatureStore

log = logging.getLogger("synclab.server")

DEFAULT_PORT = 7777


def encode(msg: dict) -> str:
    return json.dumps(msg, separators=(",", ":"))


class Peer:
    """One connected client; a queue plus writer task keeps message order
    stable no matter which task produced them."""

    def __init__(self, send_text):
        self._send_text = send_text
        self._queue: asyncio.Queue[str | None] = asyncio.Queue()
        self._task = asyncio.create_task(self._writer())
        self.session: str | None = None
        self.index: int | None = None
        self.watching: str | None = None

    def enqueue(self, payload: str) -> None:
        self._queue.put_nowait(payload)

    def send(self, msg: dict) -> None:
        self.enqueue(encode(msg))

    async def _writer(self):
        while True:
            payload = await self._queue.get()
            if payload is None:
                return
            try:
                await self._send_text(payload)
            except Exception:
                return

    async def close(self):
        self._queue.put_nowait(None)
        try:
            await self._task
        except asyncio.CancelledError:
            pass


class SessionEntry:
    def __init__(self, name: str, core: SessionCore, store_signature: bool):
        self.name = name
        self.core = core
        self.store_signature = store_signature
        self.players: dict[int, Peer] = {}
        self.watchers: list[Peer] = []
        self.task: asyncio.Task | None = None


class Hub:
    """Owns every live session, the signature store, and the data root."""

    def __init__(self, data_root: Path):
        self.data_root = Path(data_root)
        self.data_root.mkdir(parents=True, exist_ok=True)
        self.store = SignatureStore(self.data_root / "signatures")
        self.sessions: dict[str, SessionEntry] = {}

    # ---- dispatch ----------------------------------------------------------

    def handle(self, peer: Peer, msg: dict) -> None:
        kind = msg.get("t")
        if kind == "join":
            self._handle_join(peer, msg)
        elif kind == "pos":
            self._handle_pos(peer, msg)
        elif kind == "quit":
            self._handle_quit(peer)
        elif kind == "create":
            self._handle_create(peer, msg)
        elif kind == "watch":
            self._handle_watch(peer, msg)
        elif kind == "signatures":
            peer.send({"t": "signatures",
                       "entries": [{"owner": o, "kind": k, "trial": n, "file": f}
                                   for o, k, n, f in self.store.entries()]})
        else:
            peer.send({"t": "error", "reason": f"unknown message type {kind!r}"})

    def _handle_join(self, peer: Peer, msg: dict) -> None:
        name = msg.get("session", "")
        entry = self.sessions.get(name)
        if entry is None:
            peer.send({"t": "error", "reason": f"no session named {name!r}"})
            return
        try:
            index = int(msg["index"])
        except (KeyError, TypeError, ValueError):
            peer.send({"t": "error", "reason": "join needs an integer index"})
            return
        ack = entry.core.join(index, name=msg.get("name"))
        if ack["t"] == "joined":
            peer.session = name
            peer.index = index
            entry.players[index] = peer
            self._notify_status(entry)
            self._flush(entry)
        else:
            peer.send(ack)

    def _handle_pos(self, peer: Peer, msg: dict) -> None:
        entry = self.sessions.get(peer.session or "")
        if entry is None or peer.index is None:
            return
        try:
            entry.core.handle_pos(peer.index, float(msg.get("ms", 0.0)), float(msg["x"]))
        except (KeyError, TypeError, ValueError):
            pass  # malformed position updates are dropped, not fatal

    def _handle_quit(self, peer: Peer) -> None:
        entry = self.sessions.get(peer.session or "")
        if entry is None or peer.index is None:
            return
        entry.core.handle_quit(peer.index)
        self._flush(entry)

    def _handle_create(self, peer: Peer, msg: dict) -> None:
        name = msg.get("session") or f"S{len(self.sessions) + 1}"
        if name in self.sessions:
            peer.send({"t": "error", "reason": f"session {name!r} already exists"})
            return
        try:
            config = parse_trial_config(msg["config"])
            trial_number = int(msg.get("trial") or self._default_trial_number(config))
            core = SessionCore(config, session_id=name, trial_number=trial_number,
                               signature_store=self.store)
        except (KeyError, ValidationError, ValueError) as exc:
            peer.send({"t": "error", "reason": str(exc)})
            return
        entry = SessionEntry(name, core, bool(msg.get("store_signature")))
        self.sessions[name] = entry
        entry.task = asyncio.create_task(self._run_session(entry))
        peer.send({"t": "created", "session": name, "trial": trial_number})

    def _default_trial_number(self, config: TrialConfig) -> int:
        if config.trial_type is TrialType.SOLO:
            return self.store.next_trial_number(config.solo_owner, config.solo_kind)
        return 1

    def _handle_watch(self, peer: Peer, msg: dict) -> None:
        entry = self.sessions.get(msg.get("session", ""))
        if entry is None:
            peer.send({"t": "error", "reason": "no such session"})
            return
        peer.watching = entry.name
        entry.watchers.append(peer)
        self._notify_status(entry, only=peer)

    # ---- session lifecycle -------------------------------------------------

    def _notify_status(self, entry: SessionEntry, only: Peer | None = None) -> None:
        status = entry.core.lobby_status()
        msg = {"t": "status", "session": entry.name, **status}
        for peer in [only] if only else entry.watchers:
            peer.send(msg)

    def _flush(self, entry: SessionEntry) -> None:
        for index, msg in entry.core.outbox:
            peer = entry.players.get(index)
            if peer is not None:
                peer.enqueue(encode(msg))
        entry.core.outbox.clear()

    async def _run_session(self, entry: SessionEntry) -> None:
        core = entry.core
        while not core.roster_complete:
            await asyncio.sleep(0.02)
        core.start_trial()
        self._notify_status(entry)
        self._flush(entry)
        loop = asyncio.get_running_loop()
        next_tick = loop.time() + core.tick_dt
        while core.phase is not SessionPhase.FINISHED:
            await asyncio.sleep(max(0.0, next_tick - loop.time()))
            next_tick += core.tick_dt
            core.tick()
            self._flush(entry)
        await self._finish(entry)

    async def _finish(self, entry: SessionEntry) -> None:
        core = entry.core
        files: list[str] = []
        try:
            record = core.to_record()
        except ValidationError:
            record = None  # aborted before anything was recorded
        if record is not None:
            out_dir = self.data_root / entry.name
            files = [str(p) for p in record.save(out_dir)]
            if entry.store_signature and record.trial_type is TrialType.SOLO \
                    and not record.partial:
                try:
                    self.store.store(record)
                except ValidationError as exc:
                    log.warning("signature not stored: %s", exc)
        done = {"t": "done", "session": entry.name, "files": files,
                "aborted": core.end_reason == "abort"}
        for peer in entry.watchers:
            peer.send(done)
        self.sessions.pop(entry.name, None)

    def drop_peer(self, peer: Peer) -> None:
        entry = self.sessions.get(peer.session or "")
        if entry is not None and peer.index is not None:
            entry.players.pop(peer.index, None)
            entry.core.handle_quit(peer.index)
            self._flush(entry)
        if peer.watching:
            watched = self.sessions.get(peer.watching)
            if watched is not None and peer in watched.watchers:
                watched.watchers.remove(peer)


async def _serve_tcp_client(hub: Hub, reader: asyncio.StreamReader,
                            writer: asyncio.StreamWriter) -> None:
    async def send_text(payload: str):
        writer.write(payload.encode("utf-8") + b"\n")
        await writer.drain()

    peer = Peer(send_text)
    try:
        while True:
            line = await reader.readline()
            if not line:
                break
            line = line.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
            except json.JSONDecodeError:
                peer.send({"t": "error", "reason": "malformed JSON"})
                continue
            hub.handle(peer, msg)
    except (ConnectionResetError, asyncio.IncompleteReadError):
        pass
    finally:
        hub.drop_peer(peer)
        await peer.close()
        writer.close()


async def _serve_ws_client(hub: Hub, websocket) -> None:
    peer = Peer(websocket.send)
    try:
        async for raw in websocket:
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                peer.send({"t": "error", "reason": "malformed JSON"})
                continue
            hub.handle(peer, msg)
    except websockets.ConnectionClosed:
        pass
    finally:
        hub.drop_peer(peer)
        await peer.close()


async def serve(host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                ws_port: int | None = None, data_root: Path = Path("data"),
                ready: asyncio.Event | None = None) -> None:
    """Run the TCP listener and the browser WebSocket bridge until cancelled."""
    hub = Hub(data_root)
    ws_port = ws_port if ws_port is not None else port + 1
    tcp_server = await asyncio.start_server(
        lambda r, w: _serve_tcp_client(hub, r, w), host, port)
    ws_server = await websockets.serve(
        lambda ws: _serve_ws_client(hub, ws), host, ws_port)
    log.info("listening on tcp://%s:%d and ws://%s:%d", host, port, host, ws_port)
    if ready is not None:
        ready.set()
    try:
        async with tcp_server:
            await asyncio.Future()
    finally:
        ws_server.close()
        await ws_server.wait_closed()
