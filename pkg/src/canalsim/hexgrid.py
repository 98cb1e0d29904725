"""Axial hex coordinate algebra: neighborhoods, distance, disk enumeration.

Pointy-top axial coordinates.  Direction indices 0..5 map to the offset
table below and are the single direction encoding used everywhere
(routing tables, wire protocol, UI).
"""

from __future__ import annotations

from typing import NamedTuple


class HexCoord(NamedTuple):
    q: int
    r: int


# Direction index -> (dq, dr).  Order is fixed; index 0 is "east".
DIRECTIONS: tuple[HexCoord, ...] = (
    HexCoord(1, 0),
    HexCoord(1, -1),
    HexCoord(0, -1),
    HexCoord(-1, 0),
    HexCoord(-1, 1),
    HexCoord(0, 1),
)

# Wire format packs coordinates into 16 bits.
COORD_MIN = -(1 << 15)
COORD_MAX = (1 << 15) - 1


def neighbor(c: HexCoord, direction: int) -> HexCoord:
    """Neighbor of c in the given direction index (0..5)."""
    d = DIRECTIONS[direction]
    return HexCoord(c[0] + d[0], c[1] + d[1])


def neighbors(c: HexCoord) -> list[HexCoord]:
    """All 6 neighbors of c, in direction-index order."""
    q, r = c
    return [HexCoord(q + d[0], r + d[1]) for d in DIRECTIONS]


def hex_distance(a: HexCoord, b: HexCoord) -> int:
    """Minimal hop count between a and b."""
    dq = a[0] - b[0]
    dr = a[1] - b[1]
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


def hex_disk(center: HexCoord, radius: int) -> set[HexCoord]:
    """All coords within hex_distance <= radius of center.

    Cardinality is 1 + 3*radius*(radius+1).
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    cq, cr = center
    out = set()
    for dq in range(-radius, radius + 1):
        lo = max(-radius, -dq - radius)
        hi = min(radius, -dq + radius)
        for dr in range(lo, hi + 1):
            out.add(HexCoord(cq + dq, cr + dr))
    return out


def in_coord_range(c: HexCoord) -> bool:
    return COORD_MIN <= c[0] <= COORD_MAX and COORD_MIN <= c[1] <= COORD_MAX
