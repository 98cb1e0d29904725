"""Supply and delivery dynamics: cargo spawning, dock dwell, scoring.

Cargo appears at supply docks via a counter-based hash of
(seed, tick, coordinate), so the spawn stream is identical regardless of
evaluation order.  Boats dwell at their target dock for LOAD_TICKS before
exchanging one cargo unit; delivered units are the per-area score.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, TYPE_CHECKING

from canalsim.hashing import counter_hash

if TYPE_CHECKING:
    from canalsim.engine import Boat
    from canalsim.topology import DockSpec

# Ticks a boat spends moored at its target dock before a load/unload
# completes.  Global so the wire cell record stays fixed-size.
LOAD_TICKS = 2

# Per-boat cargo capacity, in units.
CARGO_CAPACITY = 1


class ResourceKind(IntEnum):
    COAL = 0
    GRAIN = 1


class ScoreEvent(NamedTuple):
    tick: int
    area_id: int
    coord: tuple[int, int]
    total: int


@dataclass
class DockRuntime:
    """Dynamic per-dock state: supply stock and mooring countdowns."""

    stock: int = 0
    dwell: dict[int, int] = field(default_factory=dict)


def spawn_supply(dock: DockSpec, tick: int, seed: int) -> int:
    """Units of cargo arriving at a supply dock this tick (0 or 1).

    Pure in (seed, tick, dock coordinate): replaying a run or evaluating
    docks in any order gives the same outcome.
    """
    rate = dock.spawn_rate
    if rate <= 0.0:
        return 0
    threshold = round(rate * 2.0**64)
    h = counter_hash(seed, tick, dock.coord[0], dock.coord[1])
    return 1 if h < threshold else 0


def dock_exchange(
    boat: Boat,
    dock: DockSpec,
    runtime: DockRuntime,
    home_class: int,
    delivery_class: int,
) -> tuple[Boat, DockRuntime, bool]:
    """Advance one tick of a boat moored at its target dock.

    First visit starts a LOAD_TICKS dwell.  When the dwell runs out, a
    supply dock with stock moves one unit aboard and retargets the boat at
    its delivery class; a delivery dock takes one unit, scores it (the
    returned flag), and sends the boat home.  If the exchange cannot happen
    (no stock, or nothing aboard) the dwell restarts and the boat waits.
    """
    from canalsim.topology import DockRole

    bid = boat.boat_id
    dwell = dict(runtime.dwell)
    if bid not in dwell:
        dwell[bid] = LOAD_TICKS
        return boat, DockRuntime(runtime.stock, dwell), False

    remaining = dwell[bid] - 1
    if remaining > 0:
        dwell[bid] = remaining
        return boat, DockRuntime(runtime.stock, dwell), False

    if dock.role == DockRole.SUPPLY:
        if runtime.stock >= 1 and boat.cargo < CARGO_CAPACITY:
            del dwell[bid]
            boat = boat._replace(cargo=boat.cargo + 1, target_class=delivery_class)
            return boat, DockRuntime(runtime.stock - 1, dwell), False
        dwell[bid] = LOAD_TICKS
        return boat, DockRuntime(runtime.stock, dwell), False

    if boat.cargo >= 1:
        del dwell[bid]
        boat = boat._replace(cargo=boat.cargo - 1, target_class=home_class)
        return boat, DockRuntime(runtime.stock, dwell), True
    dwell[bid] = LOAD_TICKS
    return boat, DockRuntime(runtime.stock, dwell), False
