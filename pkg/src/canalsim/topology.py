"""Static canal world: cell kinds, locks, docks, boats, compiled routing.

Worlds are loaded from a JSON file (schema below), validated, and
"compiled": a per-cell routing table is built once so that at runtime a
stepping cell consults only its own table plus neighbor occupancy.  The
resulting World is immutable and freely shared.

File schema (UTF-8 JSON, unknown keys rejected at every level):

    {
      "name": str,
      "slot_capacity": int,              # per-cell boat slots C
      "cells": [{"q": int, "r": int, "kind": str}],
      "locks": [{"lock_id": int, "chamber": [q, r], "low_gate": [q, r],
                 "high_gate": [q, r], "raise_ticks": int, "lower_ticks": int,
                 "chamber_capacity": int, "auto_cycle": bool?}],
      "docks": [{"coord": [q, r], "area_id": int, "dock_class": int,
                 "role": "supply"|"delivery", "resource": "coal"|"grain",
                 "spawn_rate": float?}],    # supply docks only
      "boats": [{"id": int, "q": int, "r": int, "area": int, "class": int}]
    }

Cell kinds: "channel", "junction", "lock_chamber", "supply_dock",
"delivery_dock".  Coordinates absent from "cells" are impassable bank.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

from canalsim.economy import ResourceKind
from canalsim.hashing import fnv1a64
from canalsim.hexgrid import DIRECTIONS, HexCoord, in_coord_range, neighbors

MAX_SLOT_CAPACITY = 16


class WorldError(Exception):
    """Base for world loading and validation failures."""


class ParseError(WorldError):
    """Malformed world file (bad JSON or wrong structure)."""


class ValidationError(WorldError):
    """Structurally parseable world that violates an invariant."""


class UnreachableError(WorldError):
    """Routing compilation found (cell, dock_class) pairs with no path."""

    def __init__(self, pairs: list[tuple[HexCoord, int]]):
        self.pairs = pairs
        shown = ", ".join(f"({c.q},{c.r})->class {k}" for c, k in pairs[:5])
        more = "" if len(pairs) <= 5 else f" and {len(pairs) - 5} more"
        super().__init__(f"unreachable routing pairs: {shown}{more}")


class CellKind(IntEnum):
    CHANNEL = 0
    JUNCTION = 1
    LOCK_CHAMBER = 2
    SUPPLY_DOCK = 3
    DELIVERY_DOCK = 4


class DockRole(IntEnum):
    SUPPLY = 0
    DELIVERY = 1


_KIND_NAMES = {
    "channel": CellKind.CHANNEL,
    "junction": CellKind.JUNCTION,
    "lock_chamber": CellKind.LOCK_CHAMBER,
    "supply_dock": CellKind.SUPPLY_DOCK,
    "delivery_dock": CellKind.DELIVERY_DOCK,
}
_KIND_TO_NAME = {v: k for k, v in _KIND_NAMES.items()}

_ROLE_NAMES = {"supply": DockRole.SUPPLY, "delivery": DockRole.DELIVERY}
_ROLE_TO_NAME = {v: k for k, v in _ROLE_NAMES.items()}

_RESOURCE_NAMES = {"coal": ResourceKind.COAL, "grain": ResourceKind.GRAIN}
_RESOURCE_TO_NAME = {v: k for k, v in _RESOURCE_NAMES.items()}


@dataclass(frozen=True)
class LockSpec:
    lock_id: int
    chamber: HexCoord
    low_gate: HexCoord
    high_gate: HexCoord
    raise_ticks: int
    lower_ticks: int
    chamber_capacity: int
    auto_cycle: bool = False


@dataclass(frozen=True)
class DockSpec:
    coord: HexCoord
    area_id: int
    dock_class: int
    role: DockRole
    resource: ResourceKind
    spawn_rate: float = 0.0


@dataclass(frozen=True)
class BoatInit:
    boat_id: int
    coord: HexCoord
    area_id: int
    home_class: int


@dataclass(eq=True)
class World:
    """Validated, routing-compiled canal world.  Treat as immutable."""

    name: str
    slot_capacity: int
    cells: dict[HexCoord, CellKind]
    locks: tuple[LockSpec, ...]
    docks: tuple[DockSpec, ...]
    initial_boats: tuple[BoatInit, ...]
    # (cell, dock_class) -> direction index on a shortest path to that
    # class's dock; absent for the dock cell itself.
    routing: dict[tuple[HexCoord, int], int] = field(default_factory=dict)

    # Derived lookups, rebuilt by _finalize(); excluded from equality.
    chamber_of: dict[HexCoord, LockSpec] = field(default_factory=dict, compare=False, repr=False)
    dock_at: dict[HexCoord, DockSpec] = field(default_factory=dict, compare=False, repr=False)
    dock_of_class: dict[int, DockSpec] = field(default_factory=dict, compare=False, repr=False)
    home_class: dict[int, int] = field(default_factory=dict, compare=False, repr=False)
    delivery_class: dict[int, int] = field(default_factory=dict, compare=False, repr=False)
    # dock_class -> cell -> next cell (routing applied once); hot-path cache.
    next_cell: dict[int, dict[HexCoord, HexCoord]] = field(default_factory=dict, compare=False, repr=False)
    areas: tuple[int, ...] = field(default=(), compare=False, repr=False)
    bounds: tuple[int, int, int, int] = field(default=(0, 0, 0, 0), compare=False, repr=False)
    # Lazily filled by locus extraction: static record bytes of empty,
    # non-chamber cells.
    empty_record_cache: dict[HexCoord, bytes] = field(default_factory=dict, compare=False, repr=False)

    def _finalize(self) -> None:
        self.chamber_of = {lk.chamber: lk for lk in self.locks}
        self.dock_at = {d.coord: d for d in self.docks}
        self.dock_of_class = {d.dock_class: d for d in self.docks}
        self.home_class = {b.boat_id: b.home_class for b in self.initial_boats}
        self.delivery_class = {}
        for b in self.initial_boats:
            home = self.dock_of_class.get(b.home_class)
            if home is None:
                continue
            candidates = [
                d.dock_class
                for d in self.docks
                if d.role == DockRole.DELIVERY
                and d.area_id == b.area_id
                and d.resource == home.resource
            ]
            if candidates:
                self.delivery_class[b.boat_id] = min(candidates)
        nxt: dict[int, dict[HexCoord, HexCoord]] = {}
        for (cell, cls), direction in self.routing.items():
            d = DIRECTIONS[direction]
            nxt.setdefault(cls, {})[cell] = HexCoord(cell.q + d.q, cell.r + d.r)
        self.next_cell = nxt
        area_ids = {d.area_id for d in self.docks} | {b.area_id for b in self.initial_boats}
        self.areas = tuple(sorted(area_ids))
        if self.cells:
            qs = [c.q for c in self.cells]
            rs = [c.r for c in self.cells]
            self.bounds = (min(qs), min(rs), max(qs), max(rs))


def _require_keys(obj: dict, required: set[str], optional: set[str], where: str) -> None:
    keys = set(obj)
    missing = required - keys
    if missing:
        raise ParseError(f"{where}: missing keys {sorted(missing)}")
    unknown = keys - required - optional
    if unknown:
        raise ParseError(f"{where}: unknown keys {sorted(unknown)}")


def _as_int(v, where: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise ParseError(f"{where}: expected integer, got {v!r}")
    return v


def _as_coord(v, where: str) -> HexCoord:
    if not (isinstance(v, list) and len(v) == 2):
        raise ParseError(f"{where}: expected [q, r], got {v!r}")
    c = HexCoord(_as_int(v[0], where), _as_int(v[1], where))
    if not in_coord_range(c):
        raise ValidationError(f"{where}: coord {tuple(c)} outside 16-bit range")
    return c


def load_world(text: str) -> World:
    """Parse, validate, and compile a world file."""
    try:
        raw = json.loads(text, parse_constant=lambda s: (_ for _ in ()).throw(ValueError(s)))
    except ValueError as e:
        raise ParseError(f"invalid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ParseError("world file must be a JSON object")
    _require_keys(raw, {"name", "slot_capacity", "cells", "locks", "docks", "boats"}, set(), "world")

    name = raw["name"]
    if not isinstance(name, str):
        raise ParseError("name must be a string")
    slot_capacity = _as_int(raw["slot_capacity"], "slot_capacity")

    cells: dict[HexCoord, CellKind] = {}
    for i, entry in enumerate(raw["cells"]):
        where = f"cells[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected object")
        _require_keys(entry, {"q", "r", "kind"}, set(), where)
        c = HexCoord(_as_int(entry["q"], where), _as_int(entry["r"], where))
        if not in_coord_range(c):
            raise ValidationError(f"{where}: coord {tuple(c)} outside 16-bit range")
        kind = _KIND_NAMES.get(entry["kind"])
        if kind is None:
            raise ParseError(f"{where}: unknown kind {entry['kind']!r}")
        if c in cells:
            raise ValidationError(f"{where}: duplicate coord {tuple(c)}")
        cells[c] = kind

    locks = []
    for i, entry in enumerate(raw["locks"]):
        where = f"locks[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected object")
        _require_keys(
            entry,
            {"lock_id", "chamber", "low_gate", "high_gate", "raise_ticks", "lower_ticks", "chamber_capacity"},
            {"auto_cycle"},
            where,
        )
        auto = entry.get("auto_cycle", False)
        if not isinstance(auto, bool):
            raise ParseError(f"{where}: auto_cycle must be a boolean")
        locks.append(
            LockSpec(
                lock_id=_as_int(entry["lock_id"], where),
                chamber=_as_coord(entry["chamber"], where),
                low_gate=_as_coord(entry["low_gate"], where),
                high_gate=_as_coord(entry["high_gate"], where),
                raise_ticks=_as_int(entry["raise_ticks"], where),
                lower_ticks=_as_int(entry["lower_ticks"], where),
                chamber_capacity=_as_int(entry["chamber_capacity"], where),
                auto_cycle=auto,
            )
        )

    docks = []
    for i, entry in enumerate(raw["docks"]):
        where = f"docks[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected object")
        _require_keys(entry, {"coord", "area_id", "dock_class", "role", "resource"}, {"spawn_rate"}, where)
        role = _ROLE_NAMES.get(entry["role"])
        if role is None:
            raise ParseError(f"{where}: unknown role {entry['role']!r}")
        resource = _RESOURCE_NAMES.get(entry["resource"])
        if resource is None:
            raise ParseError(f"{where}: unknown resource {entry['resource']!r}")
        rate = entry.get("spawn_rate", 0.0)
        if isinstance(rate, int) and not isinstance(rate, bool):
            rate = float(rate)
        if not isinstance(rate, float):
            raise ParseError(f"{where}: spawn_rate must be a number")
        docks.append(
            DockSpec(
                coord=_as_coord(entry["coord"], where),
                area_id=_as_int(entry["area_id"], where),
                dock_class=_as_int(entry["dock_class"], where),
                role=role,
                resource=resource,
                spawn_rate=rate,
            )
        )

    boats = []
    for i, entry in enumerate(raw["boats"]):
        where = f"boats[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected object")
        _require_keys(entry, {"id", "q", "r", "area", "class"}, set(), where)
        c = HexCoord(_as_int(entry["q"], where), _as_int(entry["r"], where))
        if not in_coord_range(c):
            raise ValidationError(f"{where}: coord {tuple(c)} outside 16-bit range")
        boats.append(
            BoatInit(
                boat_id=_as_int(entry["id"], where),
                coord=c,
                area_id=_as_int(entry["area"], where),
                home_class=_as_int(entry["class"], where),
            )
        )

    return build_world(name, slot_capacity, cells, locks, docks, boats)


def build_world(
    name: str,
    slot_capacity: int,
    cells: dict[HexCoord, CellKind],
    locks: list[LockSpec],
    docks: list[DockSpec],
    boats: list[BoatInit],
) -> World:
    """Validate parts, compile routing, and assemble a World."""
    world = World(
        name=name,
        slot_capacity=slot_capacity,
        cells=dict(cells),
        locks=tuple(sorted(locks, key=lambda lk: lk.lock_id)),
        docks=tuple(sorted(docks, key=lambda d: d.dock_class)),
        initial_boats=tuple(sorted(boats, key=lambda b: b.boat_id)),
    )
    _validate(world)
    world.routing = compile_routing(world)
    world._finalize()
    _validate_boats(world)
    return world


def _validate(world: World) -> None:
    if not 1 <= world.slot_capacity <= MAX_SLOT_CAPACITY:
        raise ValidationError(f"slot_capacity must be in 1..{MAX_SLOT_CAPACITY}, got {world.slot_capacity}")
    if not world.cells:
        raise ValidationError("world has no cells")

    cells = world.cells

    seen_lock_ids: set[int] = set()
    chambers: set[HexCoord] = set()
    for lk in world.locks:
        tag = f"lock {lk.lock_id}"
        if lk.lock_id in seen_lock_ids:
            raise ValidationError(f"{tag}: duplicate lock_id")
        seen_lock_ids.add(lk.lock_id)
        if not 0 <= lk.lock_id <= 0xFFFFFFFF:
            raise ValidationError(f"{tag}: lock_id outside 32-bit range")
        if cells.get(lk.chamber) != CellKind.LOCK_CHAMBER:
            raise ValidationError(f"{tag}: chamber {tuple(lk.chamber)} is not a lock_chamber cell")
        if lk.chamber in chambers:
            raise ValidationError(f"{tag}: chamber {tuple(lk.chamber)} already used by another lock")
        chambers.add(lk.chamber)
        if lk.low_gate == lk.high_gate:
            raise ValidationError(f"{tag}: gates must be distinct")
        nbrs = set(neighbors(lk.chamber))
        for label, gate in (("low_gate", lk.low_gate), ("high_gate", lk.high_gate)):
            if gate not in nbrs:
                raise ValidationError(f"{tag}: {label} {tuple(gate)} is not adjacent to the chamber")
            kind = cells.get(gate)
            if kind is None or kind == CellKind.LOCK_CHAMBER:
                raise ValidationError(f"{tag}: {label} {tuple(gate)} must be a passable non-chamber cell")
        passable_nbrs = {n for n in nbrs if n in cells}
        if passable_nbrs != {lk.low_gate, lk.high_gate}:
            raise ValidationError(
                f"{tag}: chamber must touch exactly its two gates, found {sorted(map(tuple, passable_nbrs))}"
            )
        if lk.raise_ticks < 1 or lk.lower_ticks < 1:
            raise ValidationError(f"{tag}: raise_ticks and lower_ticks must be >= 1")
        if not 1 <= lk.chamber_capacity <= world.slot_capacity:
            raise ValidationError(f"{tag}: chamber_capacity must be in 1..slot_capacity")

    for c, kind in cells.items():
        if kind == CellKind.LOCK_CHAMBER and c not in chambers:
            raise ValidationError(f"lock_chamber cell {tuple(c)} is not claimed by any lock")

    seen_classes: set[int] = set()
    seen_dock_coords: set[HexCoord] = set()
    for d in world.docks:
        tag = f"dock class {d.dock_class}"
        if d.dock_class in seen_classes:
            raise ValidationError(f"{tag}: duplicate dock_class")
        seen_classes.add(d.dock_class)
        if not 0 <= d.dock_class <= 0xFFFF:
            raise ValidationError(f"{tag}: dock_class outside 16-bit range")
        if not 0 <= d.area_id <= 0xFF:
            raise ValidationError(f"{tag}: area_id must be in 0..255")
        if d.coord in seen_dock_coords:
            raise ValidationError(f"{tag}: coord {tuple(d.coord)} already used by another dock")
        seen_dock_coords.add(d.coord)
        expected = CellKind.SUPPLY_DOCK if d.role == DockRole.SUPPLY else CellKind.DELIVERY_DOCK
        if cells.get(d.coord) != expected:
            raise ValidationError(f"{tag}: cell {tuple(d.coord)} is not a {_KIND_TO_NAME[expected]} cell")
        if d.role == DockRole.SUPPLY:
            if not 0.0 <= d.spawn_rate <= 1.0:
                raise ValidationError(f"{tag}: spawn_rate must be in [0, 1]")
        elif d.spawn_rate != 0.0:
            raise ValidationError(f"{tag}: delivery docks take no spawn_rate")

    for c, kind in cells.items():
        if kind in (CellKind.SUPPLY_DOCK, CellKind.DELIVERY_DOCK) and c not in seen_dock_coords:
            raise ValidationError(f"dock cell {tuple(c)} is not claimed by any dock")

    chamber_cap = {lk.chamber: lk.chamber_capacity for lk in world.locks}
    per_cell: dict[HexCoord, int] = {}
    seen_boat_ids: set[int] = set()
    for b in world.initial_boats:
        tag = f"boat {b.boat_id}"
        if b.boat_id in seen_boat_ids:
            raise ValidationError(f"{tag}: duplicate id")
        seen_boat_ids.add(b.boat_id)
        if not 0 <= b.boat_id < 0xFFFFFFFF:
            raise ValidationError(f"{tag}: id outside 32-bit range")
        if not 0 <= b.area_id <= 0xFF:
            raise ValidationError(f"{tag}: area must be in 0..255")
        if not 0 <= b.home_class <= 0xFFFF:
            raise ValidationError(f"{tag}: class outside 16-bit range")
        if b.coord not in cells:
            raise ValidationError(f"{tag}: starts on impassable coord {tuple(b.coord)}")
        per_cell[b.coord] = per_cell.get(b.coord, 0) + 1
        cap = chamber_cap.get(b.coord, world.slot_capacity)
        if per_cell[b.coord] > cap:
            raise ValidationError(f"{tag}: cell {tuple(b.coord)} over capacity {cap}")

    # Single connected component over passable cells.
    start = next(iter(cells))
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for n in neighbors(cur):
            if n in cells and n not in seen:
                seen.add(n)
                queue.append(n)
    if len(seen) != len(cells):
        missing = sorted(tuple(c) for c in set(cells) - seen)[:5]
        raise ValidationError(f"passable cells are not connected; unreachable from {tuple(start)}: {missing}...")


def _validate_boats(world: World) -> None:
    # Needs finalized dock lookups: a boat whose home class exists must be
    # able to trade (supply role home, matching delivery dock in its area).
    for b in world.initial_boats:
        home = world.dock_of_class.get(b.home_class)
        if home is None:
            continue  # dangling class: boat is inert scenery, allowed
        tag = f"boat {b.boat_id}"
        if home.role != DockRole.SUPPLY:
            raise ValidationError(f"{tag}: home class {b.home_class} is not a supply dock")
        if b.boat_id not in world.delivery_class:
            raise ValidationError(
                f"{tag}: area {b.area_id} has no delivery dock for resource "
                f"{_RESOURCE_TO_NAME[home.resource]}"
            )


def compile_routing(world: World) -> dict[tuple[HexCoord, int], int]:
    """Shortest-path direction per (cell, dock_class), ties to the lowest index.

    Hop count over passable cells; lock chambers cost 1 like any cell.
    """
    routing: dict[tuple[HexCoord, int], int] = {}
    cells = world.cells
    unreachable: list[tuple[HexCoord, int]] = []
    for dock in world.docks:
        dist: dict[HexCoord, int] = {dock.coord: 0}
        queue = deque([dock.coord])
        while queue:
            cur = queue.popleft()
            d = dist[cur]
            for n in neighbors(cur):
                if n in cells and n not in dist:
                    dist[n] = d + 1
                    queue.append(n)
        for cell in cells:
            if cell == dock.coord:
                continue
            if cell not in dist:
                unreachable.append((cell, dock.dock_class))
                continue
            want = dist[cell] - 1
            for i, off in enumerate(DIRECTIONS):
                n = HexCoord(cell.q + off.q, cell.r + off.r)
                if dist.get(n) == want:
                    routing[(cell, dock.dock_class)] = i
                    break
    if unreachable:
        raise UnreachableError(unreachable)
    return routing


def serialize_world(world: World) -> str:
    """Canonical JSON for a world: fixed key order, sorted entries."""
    doc = {
        "name": world.name,
        "slot_capacity": world.slot_capacity,
        "cells": [
            {"q": c.q, "r": c.r, "kind": _KIND_TO_NAME[k]}
            for c, k in sorted(world.cells.items())
        ],
        "locks": [
            {
                "lock_id": lk.lock_id,
                "chamber": list(lk.chamber),
                "low_gate": list(lk.low_gate),
                "high_gate": list(lk.high_gate),
                "raise_ticks": lk.raise_ticks,
                "lower_ticks": lk.lower_ticks,
                "chamber_capacity": lk.chamber_capacity,
                "auto_cycle": lk.auto_cycle,
            }
            for lk in world.locks
        ],
        "docks": [
            _dock_doc(d) for d in world.docks
        ],
        "boats": [
            {"id": b.boat_id, "q": b.coord.q, "r": b.coord.r, "area": b.area_id, "class": b.home_class}
            for b in world.initial_boats
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def _dock_doc(d: DockSpec) -> dict:
    doc = {
        "coord": list(d.coord),
        "area_id": d.area_id,
        "dock_class": d.dock_class,
        "role": _ROLE_TO_NAME[d.role],
        "resource": _RESOURCE_TO_NAME[d.resource],
    }
    if d.role == DockRole.SUPPLY:
        doc["spawn_rate"] = d.spawn_rate
    return doc


def world_hash(world: World) -> int:
    """64-bit digest of the canonical serialization; guards replay logs."""
    return fnv1a64(serialize_world(world).encode("utf-8"))
