"""Locus of visibility: subscriber-owned hex disks extracted per tick.

Extraction touches only the disk's cells, so emission cost and size are
bounded by the radius (cap 16, at most 817 cells) no matter how large the
world is.  Cell records are fixed-size so consumers can index into a
snapshot without parsing state: 8 header bytes plus 8 bytes per slot.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import NamedTuple

from canalsim.engine import Frame
from canalsim.hexgrid import HexCoord, hex_disk
from canalsim.topology import World

RADIUS_MAX = 16
NO_LOCK_PHASE = 0xFF
EMPTY_SLOT = 0xFFFFFFFF

_CELL_HEADER = struct.Struct("<hhBBBB")
_SLOT = struct.Struct("<IBBH")


class LocusError(Exception):
    pass


class DuplicateId(LocusError):
    pass


class UnknownId(LocusError):
    pass


class RadiusTooLarge(LocusError):
    pass


class GeometryMismatch(LocusError):
    pass


class Locus(NamedTuple):
    locus_id: int
    center: HexCoord
    radius: int
    stride: int


class CellRecord(NamedTuple):
    """Decoded form of one fixed-size cell record."""

    q: int
    r: int
    kind: int
    lock_phase: int
    occupancy: int
    slots: tuple[tuple[int, int, int] | None, ...]  # (boat_id, cargo, area)

    @classmethod
    def unpack(cls, data: bytes) -> CellRecord:
        q, r, kind, phase, occ, _ = _CELL_HEADER.unpack_from(data, 0)
        slots = []
        for off in range(_CELL_HEADER.size, len(data), _SLOT.size):
            bid, cargo, area, _ = _SLOT.unpack_from(data, off)
            slots.append(None if bid == EMPTY_SLOT else (bid, cargo, area))
        return cls(q, r, kind, phase, occ, tuple(slots))


def record_size(slot_capacity: int) -> int:
    return _CELL_HEADER.size + _SLOT.size * slot_capacity


@dataclass(frozen=True)
class LocusSnapshot:
    locus_id: int
    tick: int
    coords: tuple[HexCoord, ...]
    records: tuple[bytes, ...]

    def payload(self) -> bytes:
        return b"".join(self.records)

    def record_map(self) -> dict[HexCoord, bytes]:
        return dict(zip(self.coords, self.records))


@dataclass(frozen=True)
class LocusDelta:
    locus_id: int
    tick: int
    coords: tuple[HexCoord, ...]
    records: tuple[bytes, ...]


_EMPTY_SLOT_BYTES = _SLOT.pack(EMPTY_SLOT, 0, 0, 0)


def _pack_cell(world: World, frame: Frame, coord: HexCoord) -> bytes:
    kind = world.cells[coord]
    lock = world.chamber_of.get(coord)
    phase = NO_LOCK_PHASE if lock is None else int(frame.lock_states[lock.lock_id].phase)
    row = frame.slots.get(coord)
    if row is None:
        out = _CELL_HEADER.pack(coord.q, coord.r, int(kind), phase, 0, 0)
        return out + _EMPTY_SLOT_BYTES * world.slot_capacity
    occ = sum(1 for s in row if s is not None)
    parts = [_CELL_HEADER.pack(coord.q, coord.r, int(kind), phase, occ, 0)]
    boats = frame.boats
    for s in row:
        if s is None:
            parts.append(_EMPTY_SLOT_BYTES)
        else:
            b = boats[s]
            parts.append(_SLOT.pack(s, b.cargo, b.area_id, 0))
    return b"".join(parts)


def disk_coords(world: World, locus: Locus) -> tuple[HexCoord, ...]:
    """The locus's passable cells in (q, r) order."""
    cells = world.cells
    return tuple(sorted(c for c in hex_disk(locus.center, locus.radius) if c in cells))


def extract(
    frame: Frame,
    world: World,
    locus: Locus,
    coords: tuple[HexCoord, ...] | None = None,
) -> LocusSnapshot:
    """Records for the disk's passable cells in (q, r) order.

    Only disk cells are ever read; the rest of the frame stays untouched.
    Record bytes of empty non-chamber cells are static per world and
    served from a cache, so extraction stays off the stepper's budget.
    """
    if coords is None:
        coords = disk_coords(world, locus)
    slots = frame.slots
    chambers = world.chamber_of
    cache = world.empty_record_cache
    records = []
    for c in coords:
        if c not in slots and c not in chambers:
            rec = cache.get(c)
            if rec is None:
                rec = cache[c] = _pack_cell(world, frame, c)
        else:
            rec = _pack_cell(world, frame, c)
        records.append(rec)
    return LocusSnapshot(locus.locus_id, frame.tick, coords, tuple(records))


def encode_delta(prev: LocusSnapshot, cur: LocusSnapshot) -> LocusDelta:
    """Exactly the records whose bytes changed between two snapshots."""
    if prev.locus_id != cur.locus_id or prev.coords != cur.coords:
        raise GeometryMismatch(f"locus {cur.locus_id} geometry changed; emit a full snapshot")
    if prev.tick >= cur.tick:
        raise GeometryMismatch(f"delta requires prev.tick < cur.tick ({prev.tick} >= {cur.tick})")
    coords = []
    records = []
    for coord, a, b in zip(prev.coords, prev.records, cur.records):
        if a != b:
            coords.append(coord)
            records.append(b)
    return LocusDelta(cur.locus_id, cur.tick, tuple(coords), tuple(records))


def apply_delta(prev: LocusSnapshot, delta: LocusDelta) -> LocusSnapshot:
    """Reconstruct the full snapshot a delta was encoded against."""
    if prev.locus_id != delta.locus_id:
        raise GeometryMismatch("delta belongs to a different locus")
    changed = dict(zip(delta.coords, delta.records))
    unknown = set(changed) - set(prev.coords)
    if unknown:
        raise GeometryMismatch(f"delta touches coords outside the locus: {sorted(unknown)[:3]}")
    records = tuple(changed.get(c, r) for c, r in zip(prev.coords, prev.records))
    return LocusSnapshot(prev.locus_id, delta.tick, prev.coords, records)


@dataclass
class _Subscription:
    locus: Locus
    need_full: bool = True
    last: LocusSnapshot | None = None
    coords: tuple[HexCoord, ...] | None = None


class LocusRegistry:
    """One consumer's set of loci and their emission state."""

    def __init__(self):
        self._subs: dict[int, _Subscription] = {}

    def __len__(self) -> int:
        return len(self._subs)

    def loci(self) -> list[Locus]:
        return [s.locus for s in self._subs.values()]

    def create(self, locus: Locus) -> None:
        if locus.locus_id in self._subs:
            raise DuplicateId(f"locus {locus.locus_id} already exists")
        if not 0 <= locus.radius <= RADIUS_MAX:
            raise RadiusTooLarge(f"radius {locus.radius} outside 0..{RADIUS_MAX}")
        if locus.stride < 1:
            raise LocusError("stride must be >= 1")
        self._subs[locus.locus_id] = _Subscription(locus)

    def move(self, locus_id: int, center: HexCoord) -> None:
        sub = self._subs.get(locus_id)
        if sub is None:
            raise UnknownId(f"locus {locus_id} does not exist")
        if sub.locus.center != center:
            sub.locus = sub.locus._replace(center=center)
            sub.need_full = True
            sub.last = None
            sub.coords = None

    def destroy(self, locus_id: int) -> None:
        if locus_id not in self._subs:
            raise UnknownId(f"locus {locus_id} does not exist")
        del self._subs[locus_id]

    def emissions(self, frame: Frame, world: World) -> list[tuple[LocusSnapshot | LocusDelta, bool]]:
        """(snapshot-or-delta, is_full) for every locus due at this tick."""
        out = []
        for sub in self._subs.values():
            if frame.tick % sub.locus.stride != 0:
                continue
            if sub.coords is None:
                sub.coords = disk_coords(world, sub.locus)
            snap = extract(frame, world, sub.locus, sub.coords)
            if sub.need_full or sub.last is None:
                out.append((snap, True))
                sub.need_full = False
            else:
                try:
                    out.append((encode_delta(sub.last, snap), False))
                except GeometryMismatch:
                    out.append((snap, True))
            sub.last = snap
        return out
