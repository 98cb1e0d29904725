"""Author the bundled figure-eight demo world and write it as JSON.

Two radius-3 hex rings tangent at the origin; each ring is one economic
area with a supply dock on its outer edge, a delivery dock next to the
shared junction, and one lock on each arc so every route crosses a lock.
"""

from __future__ import annotations

import json
import sys

from canalsim.hexgrid import DIRECTIONS, HexCoord, neighbors
from canalsim.topology import load_world


def ring(center: HexCoord, radius: int) -> list[HexCoord]:
    """Cells at exactly `radius` from center, walked as a closed cycle."""
    out = []
    cur = HexCoord(center.q + DIRECTIONS[4].q * radius, center.r + DIRECTIONS[4].r * radius)
    for i in range(6):
        for _ in range(radius):
            out.append(cur)
            d = DIRECTIONS[i]
            cur = HexCoord(cur.q + d.q, cur.r + d.r)
    return out


def main() -> None:
    west = ring(HexCoord(-3, 0), 3)
    east = ring(HexCoord(3, 0), 3)
    cell_set = set(west) | set(east)
    assert len(cell_set) == 35, len(cell_set)

    kinds: dict[HexCoord, str] = {c: "channel" for c in cell_set}
    for c in (HexCoord(0, 0), HexCoord(0, -1), HexCoord(0, 1)):
        kinds[c] = "junction"

    docks = [
        {"coord": [-6, 0], "area_id": 0, "dock_class": 1, "role": "supply", "resource": "coal", "spawn_rate": 0.3},
        {"coord": [-1, 1], "area_id": 0, "dock_class": 2, "role": "delivery", "resource": "coal"},
        {"coord": [6, 0], "area_id": 1, "dock_class": 3, "role": "supply", "resource": "grain", "spawn_rate": 0.3},
        {"coord": [1, -1], "area_id": 1, "dock_class": 4, "role": "delivery", "resource": "grain"},
    ]
    for d in docks:
        c = HexCoord(*d["coord"])
        assert c in cell_set and kinds[c] in ("channel",), (d, kinds.get(c))
        kinds[c] = "supply_dock" if d["role"] == "supply" else "delivery_dock"

    def lock_at(lock_id: int, chamber: HexCoord) -> dict:
        gates = [n for n in neighbors(chamber) if n in cell_set]
        assert len(gates) == 2, (chamber, gates)
        assert kinds[chamber] == "channel", (chamber, kinds[chamber])
        for g in gates:
            assert kinds[g] != "lock_chamber"
        kinds[chamber] = "lock_chamber"
        low, high = sorted(gates)
        return {
            "lock_id": lock_id,
            "chamber": list(chamber),
            "low_gate": list(low),
            "high_gate": list(high),
            "raise_ticks": 3,
            "lower_ticks": 3,
            "chamber_capacity": 2,
            "auto_cycle": True,
        }

    locks = [
        lock_at(1, HexCoord(-4, 3)),   # west ring, south arc (shortest route)
        lock_at(2, HexCoord(-2, -3)),  # west ring, north arc
        lock_at(3, HexCoord(4, -3)),   # east ring, north arc (shortest route)
        lock_at(4, HexCoord(2, 3)),    # east ring, south arc
    ]

    boats = []
    west_starts = [HexCoord(-5, -1), HexCoord(-6, 1), HexCoord(-6, 2)]
    east_starts = [HexCoord(5, 1), HexCoord(6, -2), HexCoord(4, 2)]
    bid = 1
    for c in west_starts:
        assert c in cell_set and kinds[c] == "channel", (c, kinds.get(c))
        boats.append({"id": bid, "q": c.q, "r": c.r, "area": 0, "class": 1})
        bid += 1
    for c in east_starts:
        assert c in cell_set and kinds[c] == "channel", (c, kinds.get(c))
        boats.append({"id": bid, "q": c.q, "r": c.r, "area": 1, "class": 3})
        bid += 1

    doc = {
        "name": "figure-eight",
        "slot_capacity": 2,
        "cells": [{"q": c.q, "r": c.r, "kind": kinds[c]} for c in sorted(cell_set)],
        "locks": locks,
        "docks": docks,
        "boats": boats,
    }
    text = json.dumps(doc, indent=1)
    world = load_world(text)
    print(f"loaded: {world.name}, {len(world.cells)} cells, {len(world.locks)} locks, "
          f"{len(world.docks)} docks, {len(world.initial_boats)} boats, "
          f"{len(world.routing)} routing rows")
    out = sys.argv[1] if len(sys.argv) > 1 else "src/canalsim/data/figure_eight.json"
    with open(out, "w", encoding="utf-8") as f:
        f.write(text + "\n")
    print("wrote", out)


if __name__ == "__main__":
    main()
