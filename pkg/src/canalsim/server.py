"""Streaming server: sessions, command queue, and per-locus emissions.

One task steps the simulation; session tasks only parse commands into a
shared ordered queue and drain their own outbound queues.  The stepper
never blocks on network I/O: a consumer whose outbound queue overflows is
evicted with an ERR(SLOW_CONSUMER).

Commands take effect at the next tick boundary.  The ACK's effective tick
names the first frame that reflects the command, and ACKs are queued
before that frame's snapshots so no client ever sees an effect before its
acknowledgement.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from typing import Callable

from canalsim import wire
from canalsim.engine import Frame, OperateLock, initial_frame, step_events
from canalsim.hexgrid import HexCoord
from canalsim.locus import (
    DuplicateId,
    Locus,
    LocusDelta,
    LocusError,
    LocusRegistry,
    LocusSnapshot,
    RadiusTooLarge,
    UnknownId,
)
from canalsim.topology import World

log = logging.getLogger("canalsim.server")

QUEUE_LIMIT = 256
SUMMARY_INTERVAL = 100


def world_meta(world: World) -> wire.WorldMeta:
    locks = tuple(
        wire.LockInfo(
            lk.lock_id,
            tuple(lk.chamber),
            tuple(lk.low_gate),
            tuple(lk.high_gate),
            lk.raise_ticks,
            lk.lower_ticks,
            lk.chamber_capacity,
            lk.auto_cycle,
        )
        for lk in world.locks
    )
    docks = tuple(
        wire.DockInfo(tuple(d.coord), d.area_id, d.dock_class, int(d.role), int(d.resource))
        for d in world.docks
    )
    return wire.WorldMeta(world.name, world.slot_capacity, world.bounds, locks, docks)


class Session:
    """One connected consumer over TCP or the WebSocket bridge."""

    _next_id = 1

    def __init__(self, server: SimulationServer, send_raw, close, label: str):
        self.id = Session._next_id
        Session._next_id += 1
        self.server = server
        self._send_raw = send_raw  # async callable(bytes)
        self._close = close  # async callable()
        self.label = label
        self.name = ""
        self.hello_done = False
        self.registry = LocusRegistry()
        self.queue: asyncio.Queue[bytes | None] = asyncio.Queue(maxsize=server.queue_limit)
        self.evicted = False
        self.writer_task: asyncio.Task | None = None
        self._shutdown = False

    def push(self, msg: wire.Message) -> None:
        """Queue one outbound frame; evict this consumer if it is full."""
        if self.evicted:
            return
        try:
            self.queue.put_nowait(wire.encode(msg))
        except asyncio.QueueFull:
            self.evicted = True
            self.server.detach(self)
            log.warning("session %s: outbound queue overflow, evicting", self.id)
            asyncio.get_running_loop().create_task(self._evict())

    async def _evict(self) -> None:
        err = wire.encode(wire.Err(0, wire.ERR_SLOW_CONSUMER, "outbound queue overflow"))
        try:
            await asyncio.wait_for(self._send_raw(err), 1.0)
        except Exception:
            pass
        await self.shutdown()

    async def shutdown(self) -> None:
        """Flush queued frames (unless evicted), then close the transport."""
        if self._shutdown:
            return
        self._shutdown = True
        self.server.detach(self)
        if self.writer_task is not None and not self.writer_task.done():
            try:
                self.queue.put_nowait(None)
                await asyncio.wait_for(self.writer_task, 2.0)
            except (asyncio.QueueFull, asyncio.TimeoutError):
                self.writer_task.cancel()
            except Exception:
                pass
        try:
            await self._close()
        except Exception:
            pass

    async def writer_loop(self) -> None:
        while True:
            data = await self.queue.get()
            if data is None or self.evicted:
                return
            try:
                await self._send_raw(data)
            except Exception:
                return

    async def handle_message(self, msg: wire.Message) -> bool:
        """React to one inbound message; False closes the connection."""
        if isinstance(msg, wire.Hello):
            if msg.version != wire.PROTOCOL_VERSION:
                self.push(wire.Err(0, wire.ERR_UNSUPPORTED_VERSION, f"server speaks version {wire.PROTOCOL_VERSION}"))
                return False
            if self.hello_done:
                self.push(wire.Err(0, wire.ERR_PROTOCOL, "duplicate HELLO"))
                return True
            self.hello_done = True
            self.name = msg.name
            self.push(world_meta(self.server.world))
            self.push(self.server.score_summary())
            return True
        if not self.hello_done:
            self.push(wire.Err(0, wire.ERR_PROTOCOL, "HELLO required first"))
            return False
        if isinstance(
            msg,
            (
                wire.CmdOperateLock,
                wire.CmdLocusCreate,
                wire.CmdLocusMove,
                wire.CmdLocusDestroy,
                wire.CmdSetSpeed,
                wire.CmdPauseResume,
            ),
        ):
            self.server.submit(self, msg)
            return True
        self.push(wire.Err(0, wire.ERR_PROTOCOL, f"unexpected message {type(msg).__name__}"))
        return True


@dataclass
class _Pending:
    session: Session
    msg: wire.Message


class SimulationServer:
    """Owns the world, the frame, the command queue, and all sessions."""

    def __init__(
        self,
        world: World,
        seed: int,
        speed: float | None = None,
        max_ticks: int | None = None,
        queue_limit: int = QUEUE_LIMIT,
        summary_interval: int = SUMMARY_INTERVAL,
        on_command: Callable[[int, int, OperateLock], None] | None = None,
        scheduled: dict[int, list[OperateLock]] | None = None,
        on_tick: Callable[[Frame], None] | None = None,
    ):
        self.world = world
        self.frame: Frame = initial_frame(world, seed)
        self.speed = speed  # ticks per second; None = unthrottled
        self.max_ticks = max_ticks
        self.queue_limit = queue_limit
        self.summary_interval = summary_interval
        self.on_command = on_command
        self.scheduled = scheduled or {}
        self.on_tick = on_tick
        self.paused = False
        self._resume = asyncio.Event()
        self._resume.set()
        self._pending: list[_Pending] = []
        self._sessions: dict[int, Session] = {}
        self._stopping = False
        self.ticks_stepped = 0

    # -- session plumbing ---------------------------------------------------

    def attach(self, session: Session) -> None:
        self._sessions[session.id] = session

    def detach(self, session: Session) -> None:
        self._sessions.pop(session.id, None)

    def submit(self, session: Session, msg: wire.Message) -> None:
        self._pending.append(_Pending(session, msg))

    def score_summary(self) -> wire.ScoreSummary:
        totals = tuple((a, self.frame.scores[a]) for a in sorted(self.frame.scores))
        return wire.ScoreSummary(self.frame.tick, totals)

    def stop(self) -> None:
        self._stopping = True
        self._resume.set()

    # -- command application --------------------------------------------

    def _apply_pending(self, effective_tick: int) -> tuple[list[OperateLock], list[tuple[Session, wire.Message]]]:
        commands: list[OperateLock] = []
        replies: list[tuple[Session, wire.Message]] = []
        pending, self._pending = self._pending, []
        lock_ids = {lk.lock_id for lk in self.world.locks}
        for item in pending:
            s, msg = item.session, item.msg
            cid = msg.command_id
            if isinstance(msg, wire.CmdOperateLock):
                if msg.lock_id not in lock_ids:
                    replies.append((s, wire.Err(cid, wire.ERR_UNKNOWN_LOCK, f"no lock {msg.lock_id}")))
                    continue
                commands.append(OperateLock(msg.lock_id))
                if self.on_command is not None:
                    self.on_command(effective_tick, s.id, OperateLock(msg.lock_id))
            elif isinstance(msg, wire.CmdLocusCreate):
                try:
                    s.registry.create(Locus(msg.locus_id, HexCoord(*msg.center), msg.radius, msg.stride))
                except DuplicateId as e:
                    replies.append((s, wire.Err(cid, wire.ERR_DUPLICATE_LOCUS, str(e))))
                    continue
                except RadiusTooLarge as e:
                    replies.append((s, wire.Err(cid, wire.ERR_RADIUS, str(e))))
                    continue
                except LocusError as e:
                    replies.append((s, wire.Err(cid, wire.ERR_BAD_COMMAND, str(e))))
                    continue
            elif isinstance(msg, wire.CmdLocusMove):
                try:
                    s.registry.move(msg.locus_id, HexCoord(*msg.center))
                except UnknownId as e:
                    replies.append((s, wire.Err(cid, wire.ERR_UNKNOWN_LOCUS, str(e))))
                    continue
            elif isinstance(msg, wire.CmdLocusDestroy):
                try:
                    s.registry.destroy(msg.locus_id)
                except UnknownId as e:
                    replies.append((s, wire.Err(cid, wire.ERR_UNKNOWN_LOCUS, str(e))))
                    continue
            elif isinstance(msg, wire.CmdSetSpeed):
                self.speed = None if msg.ticks_per_sec == 0 else float(msg.ticks_per_sec)
            elif isinstance(msg, wire.CmdPauseResume):
                self.paused = msg.pause
                if msg.pause:
                    self._resume.clear()
                else:
                    self._resume.set()
            replies.append((s, wire.Ack(cid, effective_tick)))
        return commands, replies

    # -- the tick loop ----------------------------------------------------

    async def run(self) -> None:
        loop = asyncio.get_running_loop()
        next_deadline = loop.time()
        while not self._stopping:
            if self.max_ticks is not None and self.ticks_stepped >= self.max_ticks:
                break
            if not self._resume.is_set():
                await self._resume.wait()
                next_deadline = loop.time()
                continue

            effective = self.frame.tick + 1
            commands, replies = self._apply_pending(effective)
            commands.extend(self.scheduled.get(effective, ()))
            self.frame, events = step_events(self.world, self.frame, commands)
            self.ticks_stepped += 1
            if self.on_tick is not None:
                self.on_tick(self.frame)

            for session, reply in replies:
                session.push(reply)
            self._emit(events)

            if self.speed is None:
                if self._sessions or self.ticks_stepped % 64 == 0:
                    await asyncio.sleep(0)
            else:
                next_deadline += 1.0 / self.speed
                delay = next_deadline - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_deadline = loop.time()
                    await asyncio.sleep(0)

    def _emit(self, events) -> None:
        frame, world = self.frame, self.world
        summary = self.score_summary() if frame.tick % self.summary_interval == 0 else None
        event_msgs = [wire.Event(e.tick, e.area_id, e.coord, e.total) for e in events]
        for session in list(self._sessions.values()):
            if not session.hello_done:
                continue
            for emission, is_full in session.registry.emissions(frame, world):
                session.push(_emission_msg(emission, is_full))
            for m in event_msgs:
                session.push(m)
            if summary is not None:
                session.push(summary)


def _emission_msg(emission: LocusSnapshot | LocusDelta, is_full: bool) -> wire.Message:
    payload = b"".join(emission.records)
    if is_full:
        return wire.LocusSnapshotMsg(emission.locus_id, emission.tick, len(emission.records), payload)
    return wire.LocusDeltaMsg(emission.locus_id, emission.tick, len(emission.records), payload)


# -- transports -------------------------------------------------------------


async def _tcp_connection(server: SimulationServer, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
    peer = writer.get_extra_info("peername")

    async def send_raw(data: bytes) -> None:
        writer.write(data)
        await writer.drain()

    async def close() -> None:
        writer.close()

    session = Session(server, send_raw, close, f"tcp:{peer}")
    server.attach(session)
    session.writer_task = asyncio.create_task(session.writer_loop())
    decoder = wire.Decoder()
    try:
        while True:
            data = await reader.read(65536)
            if not data:
                break
            decoder.feed(data)
            while True:
                try:
                    msg = decoder.next()
                except (wire.UnknownType, wire.MalformedPayload) as e:
                    session.push(wire.Err(0, wire.ERR_UNKNOWN_TYPE, f"skipped frame: {e}"))
                    continue
                except wire.WireError as e:
                    session.push(wire.Err(0, wire.ERR_PROTOCOL, f"bad frame: {e}"))
                    raise
                if msg is None:
                    break
                if not await session.handle_message(msg):
                    raise ConnectionError("session closed by protocol")
    except (wire.WireError, ConnectionError, asyncio.IncompleteReadError):
        pass
    finally:
        await session.shutdown()


async def _ws_connection(server: SimulationServer, websocket):
    async def send_raw(data: bytes) -> None:
        await websocket.send(data)

    async def close() -> None:
        await websocket.close()

    session = Session(server, send_raw, close, "ws")
    server.attach(session)
    session.writer_task = asyncio.create_task(session.writer_loop())
    try:
        async for data in websocket:
            if isinstance(data, str):
                session.push(wire.Err(0, wire.ERR_PROTOCOL, "binary frames only"))
                break
            try:
                msg, _ = wire.decode(data)
            except wire.WireError as e:
                session.push(wire.Err(0, wire.ERR_PROTOCOL, f"bad frame: {e}"))
                break
            if not await session.handle_message(msg):
                break
    except Exception:
        pass
    finally:
        await session.shutdown()


async def serve(
    server: SimulationServer,
    tcp_addr: tuple[str, int] | None,
    ws_addr: tuple[str, int] | None,
    ready: asyncio.Event | None = None,
) -> None:
    """Run the tick loop plus the requested listeners until completion."""
    servers = []
    if tcp_addr is not None:
        tcp = await asyncio.start_server(
            lambda r, w: _tcp_connection(server, r, w), tcp_addr[0], tcp_addr[1]
        )
        servers.append(tcp)
        log.info("listening tcp://%s:%d", *tcp_addr)
    ws_server = None
    if ws_addr is not None:
        import websockets

        def select(connection, request):
            if request.path != "/ws":
                return connection.respond(404, "use /ws\n")
            return None

        ws_server = await websockets.serve(
            lambda c: _ws_connection(server, c), ws_addr[0], ws_addr[1], process_request=select
        )
        log.info("listening ws://%s:%d/ws", *ws_addr)
    if ready is not None:
        ready.set()
    try:
        await server.run()
    finally:
        for s in servers:
            s.close()
            await s.wait_closed()
        if ws_server is not None:
            ws_server.close()
            await ws_server.wait_closed()
