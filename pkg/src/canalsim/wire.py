"""Binary wire protocol: framing, message codecs, and a stream decoder.

Frame layout (all integers little-endian):

    magic   4 bytes  "NBCA"
    version u8       1
    type    u8       message type
    flags   u8       0
    reserved u8      0
    length  u32      payload byte count (<= 1 MiB)
    payload

Message types:

    0x01 HELLO            c->s   u8 proto_version, u16 len, name utf-8
    0x02 WORLD_META       s->c   world name, slot capacity, bounds,
                                 lock and dock directories
    0x03 LOCUS_SNAPSHOT   s->c   u32 locus_id, u64 tick, u16 count, records
    0x04 LOCUS_DELTA      s->c   same layout, changed records only
    0x05 EVENT            s->c   u64 tick, u8 area, pad, i16 q, i16 r, u64 total
    0x06 ACK              s->c   u32 command_id, u64 effective_tick
    0x07 SCORE_SUMMARY    s->c   u64 tick, u16 n, n * (u8 area, pad, u64 total)
    0x10 CMD_OPERATE_LOCK c->s   u32 command_id, u32 lock_id
    0x11 CMD_LOCUS_CREATE c->s   u32 command_id, u32 locus_id, i16 q, i16 r,
                                 u8 radius, pad, u16 stride
    0x12 CMD_LOCUS_MOVE   c->s   u32 command_id, u32 locus_id, i16 q, i16 r
    0x13 CMD_LOCUS_DESTROY c->s  u32 command_id, u32 locus_id
    0x14 CMD_SET_SPEED    c->s   u32 command_id, u32 ticks_per_sec (0 = max)
    0x15 CMD_PAUSE_RESUME c->s   u32 command_id, u8 pause, 3 pad
    0x7F ERR              s->c   u32 command_id, u16 code, u16 len, utf-8

A decoder never reads past a frame's declared length; incomplete input
raises TruncatedFrame (retry with more bytes), corrupt input raises one
of the other WireError subclasses.
"""

from __future__ import annotations

import struct
from typing import NamedTuple

MAGIC = b"NBCA"
PROTOCOL_VERSION = 1
HEADER = struct.Struct("<4sBBBBI")
MAX_PAYLOAD = 1_048_576

T_HELLO = 0x01
T_WORLD_META = 0x02
T_LOCUS_SNAPSHOT = 0x03
T_LOCUS_DELTA = 0x04
T_EVENT = 0x05
T_ACK = 0x06
T_SCORE_SUMMARY = 0x07
T_CMD_OPERATE_LOCK = 0x10
T_CMD_LOCUS_CREATE = 0x11
T_CMD_LOCUS_MOVE = 0x12
T_CMD_LOCUS_DESTROY = 0x13
T_CMD_SET_SPEED = 0x14
T_CMD_PAUSE_RESUME = 0x15
T_ERR = 0x7F

ERR_UNSUPPORTED_VERSION = 1
ERR_PROTOCOL = 2
ERR_UNKNOWN_TYPE = 3
ERR_UNKNOWN_LOCK = 4
ERR_UNKNOWN_LOCUS = 5
ERR_DUPLICATE_LOCUS = 6
ERR_RADIUS = 7
ERR_SLOW_CONSUMER = 8
ERR_BAD_COMMAND = 9


class WireError(Exception):
    pass


class BadMagic(WireError):
    pass


class UnsupportedVersion(WireError):
    pass


class OversizedFrame(WireError):
    pass


class TruncatedFrame(WireError):
    """More bytes needed; not fatal."""


class UnknownType(WireError):
    """Valid frame of an unknown type; `consumed` bytes may be skipped."""

    consumed = 0


class MalformedPayload(WireError):
    """Well-framed but undecodable payload; `consumed` bytes may be skipped."""

    consumed = 0


class Hello(NamedTuple):
    version: int
    name: str


class LockInfo(NamedTuple):
    lock_id: int
    chamber: tuple[int, int]
    low_gate: tuple[int, int]
    high_gate: tuple[int, int]
    raise_ticks: int
    lower_ticks: int
    capacity: int
    auto_cycle: bool


class DockInfo(NamedTuple):
    coord: tuple[int, int]
    area_id: int
    dock_class: int
    role: int
    resource: int


class WorldMeta(NamedTuple):
    name: str
    slot_capacity: int
    bounds: tuple[int, int, int, int]
    locks: tuple[LockInfo, ...]
    docks: tuple[DockInfo, ...]


class LocusSnapshotMsg(NamedTuple):
    locus_id: int
    tick: int
    count: int
    records: bytes


class LocusDeltaMsg(NamedTuple):
    locus_id: int
    tick: int
    count: int
    records: bytes


class Event(NamedTuple):
    tick: int
    area_id: int
    coord: tuple[int, int]
    total: int


class Ack(NamedTuple):
    command_id: int
    effective_tick: int


class ScoreSummary(NamedTuple):
    tick: int
    totals: tuple[tuple[int, int], ...]


class CmdOperateLock(NamedTuple):
    command_id: int
    lock_id: int


class CmdLocusCreate(NamedTuple):
    command_id: int
    locus_id: int
    center: tuple[int, int]
    radius: int
    stride: int


class CmdLocusMove(NamedTuple):
    command_id: int
    locus_id: int
    center: tuple[int, int]


class CmdLocusDestroy(NamedTuple):
    command_id: int
    locus_id: int


class CmdSetSpeed(NamedTuple):
    command_id: int
    ticks_per_sec: int  # 0 means unthrottled


class CmdPauseResume(NamedTuple):
    command_id: int
    pause: bool


class Err(NamedTuple):
    command_id: int
    code: int
    message: str


Message = (
    Hello
    | WorldMeta
    | LocusSnapshotMsg
    | LocusDeltaMsg
    | Event
    | Ack
    | ScoreSummary
    | CmdOperateLock
    | CmdLocusCreate
    | CmdLocusMove
    | CmdLocusDestroy
    | CmdSetSpeed
    | CmdPauseResume
    | Err
)

_LOCK_INFO = struct.Struct("<IhhhhhhHHBB")
_DOCK_INFO = struct.Struct("<hhBBHBB")
_STREAM_HEAD = struct.Struct("<IQH")
_EVENT = struct.Struct("<QBBhhQ")
_SUMMARY_ROW = struct.Struct("<BBQ")


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError("string too long for wire")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: struct.Struct):
        end = self.pos + fmt.size
        if end > len(self.data):
            raise MalformedPayload("payload shorter than its fields")
        out = fmt.unpack_from(self.data, self.pos)
        self.pos = end
        return out

    def take_bytes(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise MalformedPayload("payload shorter than its declared contents")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def take_str(self) -> str:
        (n,) = self.take(struct.Struct("<H"))
        raw = self.take_bytes(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedPayload(f"invalid utf-8 string: {e}") from None

    def done(self) -> None:
        if self.pos != len(self.data):
            raise MalformedPayload(f"{len(self.data) - self.pos} trailing payload bytes")


def _encode_payload(msg: Message) -> tuple[int, bytes]:
    if isinstance(msg, Hello):
        return T_HELLO, struct.pack("<B", msg.version) + _pack_str(msg.name)
    if isinstance(msg, WorldMeta):
        parts = [_pack_str(msg.name), struct.pack("<Bhhhh", msg.slot_capacity, *msg.bounds)]
        parts.append(struct.pack("<H", len(msg.locks)))
        for lk in msg.locks:
            parts.append(
                _LOCK_INFO.pack(
                    lk.lock_id,
                    *lk.chamber,
                    *lk.low_gate,
                    *lk.high_gate,
                    lk.raise_ticks,
                    lk.lower_ticks,
                    lk.capacity,
                    1 if lk.auto_cycle else 0,
                )
            )
        parts.append(struct.pack("<H", len(msg.docks)))
        for d in msg.docks:
            parts.append(_DOCK_INFO.pack(*d.coord, d.area_id, 0, d.dock_class, d.role, d.resource))
        return T_WORLD_META, b"".join(parts)
    if isinstance(msg, LocusSnapshotMsg):
        return T_LOCUS_SNAPSHOT, _STREAM_HEAD.pack(msg.locus_id, msg.tick, msg.count) + msg.records
    if isinstance(msg, LocusDeltaMsg):
        return T_LOCUS_DELTA, _STREAM_HEAD.pack(msg.locus_id, msg.tick, msg.count) + msg.records
    if isinstance(msg, Event):
        return T_EVENT, _EVENT.pack(msg.tick, msg.area_id, 0, *msg.coord, msg.total)
    if isinstance(msg, Ack):
        return T_ACK, struct.pack("<IQ", msg.command_id, msg.effective_tick)
    if isinstance(msg, ScoreSummary):
        parts = [struct.pack("<QH", msg.tick, len(msg.totals))]
        for area, total in msg.totals:
            parts.append(_SUMMARY_ROW.pack(area, 0, total))
        return T_SCORE_SUMMARY, b"".join(parts)
    if isinstance(msg, CmdOperateLock):
        return T_CMD_OPERATE_LOCK, struct.pack("<II", msg.command_id, msg.lock_id)
    if isinstance(msg, CmdLocusCreate):
        return T_CMD_LOCUS_CREATE, struct.pack(
            "<IIhhBBH", msg.command_id, msg.locus_id, *msg.center, msg.radius, 0, msg.stride
        )
    if isinstance(msg, CmdLocusMove):
        return T_CMD_LOCUS_MOVE, struct.pack("<IIhh", msg.command_id, msg.locus_id, *msg.center)
    if isinstance(msg, CmdLocusDestroy):
        return T_CMD_LOCUS_DESTROY, struct.pack("<II", msg.command_id, msg.locus_id)
    if isinstance(msg, CmdSetSpeed):
        return T_CMD_SET_SPEED, struct.pack("<II", msg.command_id, msg.ticks_per_sec)
    if isinstance(msg, CmdPauseResume):
        return T_CMD_PAUSE_RESUME, struct.pack("<IBBBB", msg.command_id, 1 if msg.pause else 0, 0, 0, 0)
    if isinstance(msg, Err):
        raw = msg.message.encode("utf-8")
        return T_ERR, struct.pack("<IHH", msg.command_id, msg.code, len(raw)) + raw
    raise TypeError(f"not a wire message: {msg!r}")


def encode(msg: Message) -> bytes:
    """One complete wire frame for the message."""
    msg_type, payload = _encode_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise OversizedFrame(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return HEADER.pack(MAGIC, PROTOCOL_VERSION, msg_type, 0, 0, len(payload)) + payload


def _decode_payload(msg_type: int, payload: bytes) -> Message:
    r = _Reader(payload)
    if msg_type == T_HELLO:
        (version,) = r.take(struct.Struct("<B"))
        name = r.take_str()
        r.done()
        return Hello(version, name)
    if msg_type == T_WORLD_META:
        name = r.take_str()
        cap, *bounds = r.take(struct.Struct("<Bhhhh"))
        (n_locks,) = r.take(struct.Struct("<H"))
        locks = []
        for _ in range(n_locks):
            (lid, cq, cr, lq, lr, hq, hr, up, down, lcap, auto) = r.take(_LOCK_INFO)
            locks.append(LockInfo(lid, (cq, cr), (lq, lr), (hq, hr), up, down, lcap, bool(auto)))
        (n_docks,) = r.take(struct.Struct("<H"))
        docks = []
        for _ in range(n_docks):
            (q, rr, area, _pad, cls, role, resource) = r.take(_DOCK_INFO)
            docks.append(DockInfo((q, rr), area, cls, role, resource))
        r.done()
        return WorldMeta(name, cap, tuple(bounds), tuple(locks), tuple(docks))
    if msg_type in (T_LOCUS_SNAPSHOT, T_LOCUS_DELTA):
        locus_id, tick, count = r.take(_STREAM_HEAD)
        records = r.take_bytes(len(payload) - r.pos)
        if count and len(records) % count:
            raise MalformedPayload("record blob not divisible by record count")
        if count == 0 and records:
            raise MalformedPayload("records present but count is zero")
        cls = LocusSnapshotMsg if msg_type == T_LOCUS_SNAPSHOT else LocusDeltaMsg
        return cls(locus_id, tick, count, records)
    if msg_type == T_EVENT:
        tick, area, _pad, q, rr, total = r.take(_EVENT)
        r.done()
        return Event(tick, area, (q, rr), total)
    if msg_type == T_ACK:
        cid, tick = r.take(struct.Struct("<IQ"))
        r.done()
        return Ack(cid, tick)
    if msg_type == T_SCORE_SUMMARY:
        tick, n = r.take(struct.Struct("<QH"))
        totals = []
        for _ in range(n):
            area, _pad, total = r.take(_SUMMARY_ROW)
            totals.append((area, total))
        r.done()
        return ScoreSummary(tick, tuple(totals))
    if msg_type == T_CMD_OPERATE_LOCK:
        cid, lock_id = r.take(struct.Struct("<II"))
        r.done()
        return CmdOperateLock(cid, lock_id)
    if msg_type == T_CMD_LOCUS_CREATE:
        cid, locus_id, q, rr, radius, _pad, stride = r.take(struct.Struct("<IIhhBBH"))
        r.done()
        return CmdLocusCreate(cid, locus_id, (q, rr), radius, stride)
    if msg_type == T_CMD_LOCUS_MOVE:
        cid, locus_id, q, rr = r.take(struct.Struct("<IIhh"))
        r.done()
        return CmdLocusMove(cid, locus_id, (q, rr))
    if msg_type == T_CMD_LOCUS_DESTROY:
        cid, locus_id = r.take(struct.Struct("<II"))
        r.done()
        return CmdLocusDestroy(cid, locus_id)
    if msg_type == T_CMD_SET_SPEED:
        cid, tps = r.take(struct.Struct("<II"))
        r.done()
        return CmdSetSpeed(cid, tps)
    if msg_type == T_CMD_PAUSE_RESUME:
        cid, pause, *_ = r.take(struct.Struct("<IBBBB"))
        r.done()
        return CmdPauseResume(cid, bool(pause))
    if msg_type == T_ERR:
        cid, code, n = r.take(struct.Struct("<IHH"))
        raw = r.take_bytes(n)
        r.done()
        try:
            return Err(cid, code, raw.decode("utf-8"))
        except UnicodeDecodeError as e:
            raise MalformedPayload(f"invalid utf-8 in error message: {e}") from None
    raise UnknownType(f"unknown message type 0x{msg_type:02x}")


def decode(data: bytes) -> tuple[Message, int]:
    """Decode one frame from the head of data; returns (message, consumed).

    Raises TruncatedFrame when data holds less than one complete frame.
    """
    if len(data) < HEADER.size:
        raise TruncatedFrame(f"need {HEADER.size} header bytes, have {len(data)}")
    magic, version, msg_type, _flags, _res, length = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise UnsupportedVersion(f"protocol version {version}, expected {PROTOCOL_VERSION}")
    if length > MAX_PAYLOAD:
        raise OversizedFrame(f"declared payload of {length} bytes exceeds {MAX_PAYLOAD}")
    end = HEADER.size + length
    if len(data) < end:
        raise TruncatedFrame(f"need {end} bytes, have {len(data)}")
    try:
        msg = _decode_payload(msg_type, data[HEADER.size : end])
    except (UnknownType, MalformedPayload) as e:
        e.consumed = end
        raise
    return msg, end


class Decoder:
    """Incremental frame decoder over a byte stream."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> None:
        self._buf += data

    def next(self) -> Message | None:
        """The next complete message, or None if more bytes are needed.

        UnknownType and MalformedPayload drop the offending frame before
        propagating, so callers may report the error and keep reading.
        """
        try:
            msg, used = decode(bytes(self._buf))
        except TruncatedFrame:
            return None
        except (UnknownType, MalformedPayload) as e:
            del self._buf[: e.consumed]
            raise
        del self._buf[:used]
        return msg

    def __iter__(self):
        while True:
            msg = self.next()
            if msg is None:
                return
            yield msg
