"""Sequential reference stepper: same tick semantics, one cell at a time.

An independent re-implementation of the tick rules used as the oracle for
the parallel stepper.  It walks cells in canonical (q, r) order, keeps its
own bookkeeping, and re-derives gate, grant, dwell and lock logic from
scratch; it shares only the data types and the compiled routing table.
"""

from __future__ import annotations

from canalsim.economy import LOAD_TICKS, CARGO_CAPACITY, spawn_supply
from canalsim.engine import Boat, Frame, LockPhase, LockRuntime, OperateLock
from canalsim.hexgrid import DIRECTIONS, HexCoord
from canalsim.topology import DockRole, World


def _occupancy(frame: Frame, coord: HexCoord) -> int:
    row = frame.slots.get(coord)
    return 0 if row is None else sum(1 for s in row if s is not None)


def _routed_next(world: World, cell: HexCoord, dock_class: int) -> HexCoord | None:
    direction = world.routing.get((cell, dock_class))
    if direction is None:
        return None
    off = DIRECTIONS[direction]
    return HexCoord(cell.q + off.q, cell.r + off.r)


def _wants_chamber(world: World, frame: Frame, gate: HexCoord, chamber: HexCoord) -> bool:
    row = frame.slots.get(gate)
    if not row:
        return False
    for s in row:
        if s is None:
            continue
        boat = frame.boats[s]
        dock = world.dock_of_class.get(boat.target_class)
        if dock is None or dock.coord == gate:
            continue
        if _routed_next(world, gate, boat.target_class) == chamber:
            return True
    return False


def _advance(world: World, frame: Frame, state: LockRuntime, lock) -> LockRuntime:
    occ = _occupancy(frame, lock.chamber)
    latched = state.latched
    if lock.auto_cycle and occ > 0:
        latched = True
    if lock.auto_cycle and occ == 0 and not latched and state.phase in (LockPhase.LOW_OPEN, LockPhase.HIGH_OPEN):
        if state.phase == LockPhase.LOW_OPEN:
            open_gate, closed_gate = lock.low_gate, lock.high_gate
        else:
            open_gate, closed_gate = lock.high_gate, lock.low_gate
        if _wants_chamber(world, frame, closed_gate, lock.chamber) and not _wants_chamber(
            world, frame, open_gate, lock.chamber
        ):
            latched = True
    if state.phase == LockPhase.LOW_OPEN:
        return LockRuntime(LockPhase.RAISING, lock.raise_ticks, False) if latched else LockRuntime(state.phase, 0, False)
    if state.phase == LockPhase.HIGH_OPEN:
        return LockRuntime(LockPhase.LOWERING, lock.lower_ticks, False) if latched else LockRuntime(state.phase, 0, False)
    t = state.timer - 1
    if t > 0:
        return LockRuntime(state.phase, t, latched)
    if state.phase == LockPhase.RAISING:
        return LockRuntime(LockPhase.HIGH_OPEN, 0, latched)
    return LockRuntime(LockPhase.LOW_OPEN, 0, latched)


def _edge_open(world: World, locks: dict[int, LockRuntime], a: HexCoord, b: HexCoord) -> bool:
    for lock in world.locks:
        if lock.chamber == a:
            st = locks[lock.lock_id]
            if b == lock.low_gate:
                return st.phase == LockPhase.LOW_OPEN
            if b == lock.high_gate:
                return st.phase == LockPhase.HIGH_OPEN
            return False
        if lock.chamber == b:
            st = locks[lock.lock_id]
            if a == lock.low_gate:
                return st.phase == LockPhase.LOW_OPEN
            if a == lock.high_gate:
                return st.phase == LockPhase.HIGH_OPEN
            return False
    return True


def reference_step(world: World, frame: Frame, commands=()) -> Frame:
    # Phase 1+2: latches, then lock machines in lock id order.
    locks2 = dict(frame.lock_states)
    for cmd in commands:
        if isinstance(cmd, OperateLock) and cmd.lock_id in locks2:
            old = locks2[cmd.lock_id]
            locks2[cmd.lock_id] = LockRuntime(old.phase, old.timer, True)
    for lock in sorted(world.locks, key=lambda lk: lk.lock_id):
        locks2[lock.lock_id] = _advance(world, frame, locks2[lock.lock_id], lock)

    # Phase 3: visit cells in canonical order, slots in order; each boat
    # emits at most one routed intent.
    intents: list[tuple[int, HexCoord, HexCoord]] = []
    for cell in sorted(frame.slots):
        for slot in frame.slots[cell]:
            if slot is None:
                continue
            boat = frame.boats[slot]
            dock = world.dock_of_class.get(boat.target_class)
            if dock is None or dock.coord == cell:
                continue
            dst = _routed_next(world, cell, boat.target_class)
            if dst is None or dst not in world.cells:
                continue
            if _edge_open(world, locks2, cell, dst):
                intents.append((slot, cell, dst))

    # Phase 4: grants by ascending boat id against start-of-tick occupancy.
    chamber_cap = {lk.chamber: lk.chamber_capacity for lk in world.locks}
    granted = []
    taken: dict[HexCoord, int] = {}
    for bid, src, dst in sorted(intents):
        cap = chamber_cap.get(dst, world.slot_capacity)
        free = cap - _occupancy(frame, dst)
        if taken.get(dst, 0) < free:
            taken[dst] = taken.get(dst, 0) + 1
            granted.append((bid, src, dst))

    # Phase 5: apply.  Arrivals fill the lowest slot that was empty at the
    # start of the tick, in grant order.
    slots2 = {c: list(row) for c, row in frame.slots.items()}
    positions2 = dict(frame.positions)
    moved2 = dict(frame.last_moved)
    start_empty: dict[HexCoord, list[int]] = {}
    for bid, src, dst in granted:
        row = slots2[src]
        row[row.index(bid)] = None
        if dst not in start_empty:
            orig = frame.slots.get(dst)
            start_empty[dst] = (
                list(range(world.slot_capacity))
                if orig is None
                else [i for i, s in enumerate(orig) if s is None]
            )
        idx = start_empty[dst].pop(0)
        if dst not in slots2:
            slots2[dst] = [None] * world.slot_capacity
        slots2[dst][idx] = bid
        positions2[bid] = dst
        moved2[bid] = frame.tick + 1
    for c in [c for c, row in slots2.items() if all(s is None for s in row)]:
        del slots2[c]

    # Phase 6: economy.  Spawn per supply dock, then dwell and exchange per
    # boat in ascending id order.
    stocks2 = dict(frame.dock_stocks)
    for dock in world.docks:
        if dock.role == DockRole.SUPPLY and dock.spawn_rate > 0:
            stocks2[dock.coord] += spawn_supply(dock, frame.tick, frame.rng_seed)
    boats2 = dict(frame.boats)
    dwell2 = {c: dict(m) for c, m in frame.dock_dwell.items()}
    scores2 = dict(frame.scores)
    for bid in sorted(boats2):
        boat = boats2[bid]
        dock = world.dock_of_class.get(boat.target_class)
        if dock is None or positions2[bid] != dock.coord:
            continue
        pending = dwell2.setdefault(dock.coord, {})
        if bid not in pending:
            pending[bid] = LOAD_TICKS
            continue
        left = pending[bid] - 1
        if left > 0:
            pending[bid] = left
            continue
        if dock.role == DockRole.SUPPLY:
            if stocks2[dock.coord] >= 1 and boat.cargo < CARGO_CAPACITY:
                stocks2[dock.coord] -= 1
                del pending[bid]
                boats2[bid] = Boat(bid, boat.area_id, boat.cargo + 1, world.delivery_class[bid])
            else:
                pending[bid] = LOAD_TICKS
        else:
            if boat.cargo >= 1:
                del pending[bid]
                boats2[bid] = Boat(bid, boat.area_id, boat.cargo - 1, world.home_class[bid])
                scores2[dock.area_id] = scores2.get(dock.area_id, 0) + 1
            else:
                pending[bid] = LOAD_TICKS
    for c in [c for c, m in dwell2.items() if not m]:
        del dwell2[c]

    return Frame(
        tick=frame.tick + 1,
        slots=slots2,
        boats=boats2,
        positions=positions2,
        lock_states=locks2,
        dock_stocks=stocks2,
        dock_dwell=dwell2,
        scores=scores2,
        rng_seed=frame.rng_seed,
        last_moved=moved2,
    )
