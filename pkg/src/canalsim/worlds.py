"""Bundled demo world and synthetic benchmark world construction."""

from __future__ import annotations

from importlib import resources

from canalsim.economy import ResourceKind
from canalsim.hexgrid import HexCoord
from canalsim.topology import BoatInit, CellKind, DockRole, DockSpec, World, build_world, load_world

DEMO_WORLD = "figure_eight.json"


def demo_world_text() -> str:
    return resources.files("canalsim.data").joinpath(DEMO_WORLD).read_text("utf-8")


def load_demo_world() -> World:
    """The bundled figure-eight world: 2 areas, 4 locks, 8 boats."""
    return load_world(demo_world_text())


def make_rect_world(
    width: int,
    height: int,
    name: str = "rect",
    slot_capacity: int = 2,
    boats: int = 0,
    with_docks: bool = False,
    spawn_rate: float = 0.25,
) -> World:
    """A width x height block of channel cells, optionally with a dock pair
    per area in opposite corners and boats spread along the middle row.

    Used by the benchmark flag and by size-independence tests; cell count
    is width * height.
    """
    cells = {HexCoord(q, r): CellKind.CHANNEL for q in range(width) for r in range(height)}
    docks: list[DockSpec] = []
    boat_inits: list[BoatInit] = []
    if with_docks:
        corners = [
            (HexCoord(0, 0), HexCoord(width - 1, height - 1), 0, ResourceKind.COAL),
            (HexCoord(width - 1, 0), HexCoord(0, height - 1), 1, ResourceKind.GRAIN),
        ]
        cls = 1
        for supply_c, delivery_c, area, resource in corners:
            cells[supply_c] = CellKind.SUPPLY_DOCK
            cells[delivery_c] = CellKind.DELIVERY_DOCK
            docks.append(DockSpec(supply_c, area, cls, DockRole.SUPPLY, resource, spawn_rate))
            docks.append(DockSpec(delivery_c, area, cls + 1, DockRole.DELIVERY, resource))
            cls += 2
    if boats:
        mid = height // 2
        lane = max(1, width - 2)
        for i in range(boats):
            row, col = divmod(i, lane)
            coord = HexCoord(1 + col, mid + row)
            if coord not in cells or cells[coord] != CellKind.CHANNEL:
                raise ValueError(f"world too small for {boats} boats")
            area = i % 2
            boat_inits.append(BoatInit(i + 1, coord, area, 1 + 2 * area))
    return build_world(name, slot_capacity, cells, [], docks, boat_inits)
