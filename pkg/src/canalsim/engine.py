"""Cellular-automaton core: one tick advances every cell simultaneously.

A step is a pure function of (world, frame, commands) composed of fixed
sub-phases:

    1. apply commands          latch lock Operate requests
    2. advance_locks           timed raise/lower state machines
    3. propose_moves           each boat emits at most one intent
    4. resolve_conflicts       deterministic grant by ascending boat id
    5. apply moves             granted boats shift one cell
    6. economy                 spawn, dock dwell/exchange, scoring
    7. tick + 1

Cell occupancy is always read from the start-of-tick frame: a slot
vacated this tick cannot be entered this tick, so there are no chain
moves and no swaps.  Lock phases and positions flow forward through the
pipeline (a lock that opens in phase 2 admits boats in phase 3 of the
same tick).  Every ordering below is fixed, which makes two runs with
the same seed and command log bit-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, NamedTuple

from canalsim import economy
from canalsim.economy import DockRuntime, ScoreEvent
from canalsim.hashing import fnv1a64
from canalsim.hexgrid import HexCoord
from canalsim.topology import DockRole, LockSpec, World

EMPTY_SLOT = 0xFFFFFFFF


class LockPhase(IntEnum):
    LOW_OPEN = 0
    RAISING = 1
    HIGH_OPEN = 2
    LOWERING = 3


class Boat(NamedTuple):
    boat_id: int
    area_id: int
    cargo: int
    target_class: int


class LockRuntime(NamedTuple):
    phase: LockPhase
    timer: int
    latched: bool


class OperateLock(NamedTuple):
    """Command: toggle a lock's transit at its next open phase."""

    lock_id: int


class Intent(NamedTuple):
    boat_id: int
    src: HexCoord
    dst: HexCoord


@dataclass
class Frame:
    """Complete dynamic state at one tick.

    `slots` is sparse: only cells holding at least one boat appear, each
    as a list of slot_capacity optional boat ids (slot order significant).
    `positions` is a derived boat->cell index kept consistent with slots.
    """

    tick: int
    slots: dict[HexCoord, list[int | None]]
    boats: dict[int, Boat]
    positions: dict[int, HexCoord]
    lock_states: dict[int, LockRuntime]
    dock_stocks: dict[HexCoord, int]
    dock_dwell: dict[HexCoord, dict[int, int]]
    scores: dict[int, int]
    rng_seed: int
    # Starvation diagnostic: tick at which each boat last changed cells.
    last_moved: dict[int, int]

    def cell_slots(self, coord: HexCoord, capacity: int) -> list[int | None]:
        got = self.slots.get(coord)
        return got if got is not None else [None] * capacity


def initial_frame(world: World, seed: int) -> Frame:
    slots: dict[HexCoord, list[int | None]] = {}
    boats: dict[int, Boat] = {}
    positions: dict[int, HexCoord] = {}
    for b in world.initial_boats:
        row = slots.setdefault(b.coord, [None] * world.slot_capacity)
        row[row.index(None)] = b.boat_id
        boats[b.boat_id] = Boat(b.boat_id, b.area_id, 0, b.home_class)
        positions[b.boat_id] = b.coord
    return Frame(
        tick=0,
        slots=slots,
        boats=boats,
        positions=positions,
        lock_states={lk.lock_id: LockRuntime(LockPhase.LOW_OPEN, 0, False) for lk in world.locks},
        dock_stocks={d.coord: 0 for d in world.docks if d.role == DockRole.SUPPLY},
        dock_dwell={},
        scores={a: 0 for a in world.areas},
        rng_seed=seed,
        last_moved={b.boat_id: 0 for b in world.initial_boats},
    )


def advance_lock(lock: LockSpec, state: LockRuntime, chamber_occupancy: int) -> LockRuntime:
    """One tick of a lock's state machine.

    An auto_cycle lock latches its own Operate whenever the chamber is
    occupied; the latch survives transit phases and is consumed at the
    next open phase, so such a lock carries each boat across and swings
    back on its own.
    """
    latched = state.latched or (lock.auto_cycle and chamber_occupancy > 0)
    phase = state.phase
    if phase == LockPhase.LOW_OPEN:
        if latched:
            return LockRuntime(LockPhase.RAISING, lock.raise_ticks, False)
        return state
    if phase == LockPhase.HIGH_OPEN:
        if latched:
            return LockRuntime(LockPhase.LOWERING, lock.lower_ticks, False)
        return state
    timer = state.timer - 1
    if timer > 0:
        return LockRuntime(phase, timer, latched)
    if phase == LockPhase.RAISING:
        return LockRuntime(LockPhase.HIGH_OPEN, 0, latched)
    return LockRuntime(LockPhase.LOW_OPEN, 0, latched)


def _gate_allows(world: World, lock_states: dict[int, LockRuntime], src: HexCoord, dst: HexCoord) -> bool:
    lock = world.chamber_of.get(src)
    if lock is not None:
        st = lock_states[lock.lock_id]
        if dst == lock.low_gate:
            return st.phase == LockPhase.LOW_OPEN
        if dst == lock.high_gate:
            return st.phase == LockPhase.HIGH_OPEN
        return False
    lock = world.chamber_of.get(dst)
    if lock is not None:
        st = lock_states[lock.lock_id]
        if src == lock.low_gate:
            return st.phase == LockPhase.LOW_OPEN
        if src == lock.high_gate:
            return st.phase == LockPhase.HIGH_OPEN
        return False
    return True


def propose_moves(
    world: World,
    frame: Frame,
    lock_states: dict[int, LockRuntime] | None = None,
) -> list[Intent]:
    """Each boat's routed one-cell intent, in ascending boat id order.

    A boat sitting at its target dock trades instead of moving; a move
    across a closed lock gate is withheld.  lock_states defaults to the
    frame's own; the stepper passes the post-advance states.
    """
    if lock_states is None:
        lock_states = frame.lock_states
    intents = []
    positions = frame.positions
    dock_of_class = world.dock_of_class
    next_cell = world.next_cell
    for bid in sorted(frame.boats):
        boat = frame.boats[bid]
        pos = positions[bid]
        dock = dock_of_class.get(boat.target_class)
        if dock is None or dock.coord == pos:
            continue
        dst = next_cell[boat.target_class].get(pos)
        if dst is None:
            continue
        if _gate_allows(world, lock_states, pos, dst):
            intents.append(Intent(bid, pos, dst))
    return intents


def resolve_conflicts(world: World, frame: Frame, intents: Iterable[Intent]) -> list[Intent]:
    """Grant moves by ascending boat id against start-of-tick occupancy."""
    granted = []
    taken: dict[HexCoord, int] = {}
    cap_default = world.slot_capacity
    chamber_of = world.chamber_of
    slots = frame.slots
    for it in sorted(intents):
        row = slots.get(it.dst)
        occ = 0 if row is None else sum(1 for s in row if s is not None)
        lock = chamber_of.get(it.dst)
        cap = lock.chamber_capacity if lock is not None else cap_default
        used = taken.get(it.dst, 0)
        if used < cap - occ:
            taken[it.dst] = used + 1
            granted.append(it)
    return granted


def step(world: World, frame: Frame, commands: Iterable[OperateLock] = ()) -> Frame:
    return step_events(world, frame, commands)[0]


def _gate_demand(world: World, frame: Frame, gate: HexCoord, chamber: HexCoord) -> bool:
    """True if some boat at the gate cell is routed into the chamber."""
    row = frame.slots.get(gate)
    if row is None:
        return False
    for s in row:
        if s is None:
            continue
        boat = frame.boats[s]
        dock = world.dock_of_class.get(boat.target_class)
        if dock is None or dock.coord == gate:
            continue
        if world.next_cell[boat.target_class].get(gate) == chamber:
            return True
    return False


def step_events(
    world: World,
    frame: Frame,
    commands: Iterable[OperateLock] = (),
) -> tuple[Frame, list[ScoreEvent]]:
    """Advance one tick; also return the score events it produced."""
    slots = frame.slots

    # 1+2: latch commands, then advance every lock against start-of-tick
    # chamber occupancy.  An idle auto_cycle lock also latches when boats
    # wait only on its closed side (a "fetch"), so one-sided traffic never
    # stalls; with traffic waiting on the open side the fetch stays quiet
    # and that side boards first.
    locks2 = dict(frame.lock_states)
    for cmd in commands:
        if isinstance(cmd, OperateLock) and cmd.lock_id in locks2:
            st = locks2[cmd.lock_id]
            locks2[cmd.lock_id] = LockRuntime(st.phase, st.timer, True)
    for lk in world.locks:
        row = slots.get(lk.chamber)
        occ = 0 if row is None else sum(1 for s in row if s is not None)
        st = locks2[lk.lock_id]
        if lk.auto_cycle and occ == 0 and not st.latched and st.phase in (LockPhase.LOW_OPEN, LockPhase.HIGH_OPEN):
            if st.phase == LockPhase.LOW_OPEN:
                open_gate, closed_gate = lk.low_gate, lk.high_gate
            else:
                open_gate, closed_gate = lk.high_gate, lk.low_gate
            if _gate_demand(world, frame, closed_gate, lk.chamber) and not _gate_demand(
                world, frame, open_gate, lk.chamber
            ):
                st = LockRuntime(st.phase, st.timer, True)
        locks2[lk.lock_id] = advance_lock(lk, st, occ)

    # 3+4: intents against advanced gates, grants against start occupancy.
    intents = propose_moves(world, frame, locks2)
    granted = resolve_conflicts(world, frame, intents)

    tick = frame.tick

    # 5: apply moves.  Arrivals take the lowest slot that was empty at the
    # start of the tick, in grant order; departures leave holes.
    slots2 = {c: list(row) for c, row in slots.items()}
    positions2 = dict(frame.positions)
    last_moved2 = dict(frame.last_moved)
    cap = world.slot_capacity
    free_iters: dict[HexCoord, list[int]] = {}
    for it in granted:
        src_row = slots2[it.src]
        src_row[src_row.index(it.boat_id)] = None
        if it.dst not in free_iters:
            start_row = slots.get(it.dst)
            free_iters[it.dst] = (
                list(range(cap)) if start_row is None else [i for i, s in enumerate(start_row) if s is None]
            )
        idx = free_iters[it.dst].pop(0)
        dst_row = slots2.get(it.dst)
        if dst_row is None:
            dst_row = slots2[it.dst] = [None] * cap
        dst_row[idx] = it.boat_id
        positions2[it.boat_id] = it.dst
        last_moved2[it.boat_id] = tick + 1
    for src in {it.src for it in granted}:
        row = slots2.get(src)
        if row is not None and all(s is None for s in row):
            del slots2[src]

    # 6: economy.  Spawns are counter-hashed on the start tick; exchanges
    # run against post-move positions in ascending boat id order.
    boats2 = dict(frame.boats)
    stocks2 = dict(frame.dock_stocks)
    dwell2 = frame.dock_dwell
    dwell_copied = False
    scores2 = dict(frame.scores)
    events: list[ScoreEvent] = []
    seed = frame.rng_seed
    for dock in world.docks:
        if dock.role == DockRole.SUPPLY and dock.spawn_rate > 0.0:
            stocks2[dock.coord] = stocks2[dock.coord] + economy.spawn_supply(dock, tick, seed)
    dock_of_class = world.dock_of_class
    for bid in sorted(boats2):
        boat = boats2[bid]
        dock = dock_of_class.get(boat.target_class)
        if dock is None or positions2[bid] != dock.coord:
            continue
        if not dwell_copied:
            dwell2 = {c: dict(m) for c, m in dwell2.items()}
            dwell_copied = True
        runtime = DockRuntime(stocks2.get(dock.coord, 0), dwell2.get(dock.coord, {}))
        home = world.home_class[bid]
        delivery = world.delivery_class.get(bid, home)
        boat2, runtime2, scored = economy.dock_exchange(boat, dock, runtime, home, delivery)
        boats2[bid] = boat2
        if dock.coord in stocks2:
            stocks2[dock.coord] = runtime2.stock
        if runtime2.dwell:
            dwell2[dock.coord] = runtime2.dwell
        else:
            dwell2.pop(dock.coord, None)
        if scored:
            scores2[dock.area_id] = scores2.get(dock.area_id, 0) + 1
            events.append(ScoreEvent(tick + 1, dock.area_id, tuple(dock.coord), scores2[dock.area_id]))
    if not dwell_copied:
        dwell2 = {c: dict(m) for c, m in dwell2.items()}

    next_frame = Frame(
        tick=tick + 1,
        slots=slots2,
        boats=boats2,
        positions=positions2,
        lock_states=locks2,
        dock_stocks=stocks2,
        dock_dwell=dwell2,
        scores=scores2,
        rng_seed=seed,
        last_moved=last_moved2,
    )
    return next_frame, events


def frame_hash(world: World, frame: Frame) -> int:
    """FNV-1a 64 over the canonical frame serialization.

    Layout (all little-endian): tick u64; per passable cell in (q, r)
    order: q i16, r i16, then slot_capacity slot records of
    (boat_id u32 | 0xFFFFFFFF, cargo u8, area u8, target u16); per lock by
    id: id u32, phase u8, timer u16, latched u8; per supply dock by coord:
    q i16, r i16, stock u64; per area by id: area u16, score u64.
    """
    out = bytearray(struct.pack("<Q", frame.tick))
    pack_cell = struct.pack
    boats = frame.boats
    cap = world.slot_capacity
    empty = b"\xff\xff\xff\xff\x00\x00\x00\x00"
    for coord in sorted(world.cells):
        out += pack_cell("<hh", coord.q, coord.r)
        row = frame.slots.get(coord)
        if row is None:
            out += empty * cap
            continue
        for s in row:
            if s is None:
                out += empty
            else:
                b = boats[s]
                out += pack_cell("<IBBH", s, b.cargo, b.area_id, b.target_class)
    for lock_id in sorted(frame.lock_states):
        st = frame.lock_states[lock_id]
        out += pack_cell("<IBHB", lock_id, st.phase, st.timer, 1 if st.latched else 0)
    for coord in sorted(frame.dock_stocks):
        out += pack_cell("<hhQ", coord.q, coord.r, frame.dock_stocks[coord])
    for area in sorted(frame.scores):
        out += pack_cell("<HQ", area, frame.scores[area])
    return fnv1a64(bytes(out))
