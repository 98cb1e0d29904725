"""World loading, validation, and routing compilation."""

from __future__ import annotations

import json
from collections import deque

import pytest

from canalsim.hexgrid import DIRECTIONS, HexCoord, neighbors
from canalsim.topology import (
    CellKind,
    ParseError,
    ValidationError,
    load_world,
    serialize_world,
    world_hash,
)
from canalsim.worlds import demo_world_text, load_demo_world
from tests.worldgen import make_random_world


def world_doc(**overrides):
    """A small valid world document to mutate in failure tests."""
    doc = {
        "name": "t",
        "slot_capacity": 2,
        "cells": [
            {"q": 0, "r": 0, "kind": "channel"},
            {"q": 1, "r": 0, "kind": "channel"},
            {"q": 2, "r": 0, "kind": "channel"},
        ],
        "locks": [],
        "docks": [],
        "boats": [{"id": 1, "q": 0, "r": 0, "area": 0, "class": 9}],
    }
    doc.update(overrides)
    return doc


class TestLoad:
    def test_minimal_three_cell_line(self):
        world = load_world(json.dumps(world_doc()))
        assert len(world.cells) == 3
        assert len(world.initial_boats) == 1

    def test_bad_json(self):
        with pytest.raises(ParseError):
            load_world("{nope")

    def test_unknown_top_level_key(self):
        doc = world_doc()
        doc["extra"] = 1
        with pytest.raises(ParseError, match="unknown keys"):
            load_world(json.dumps(doc))

    def test_unknown_nested_key(self):
        doc = world_doc()
        doc["cells"][0]["color"] = "red"
        with pytest.raises(ParseError, match="unknown keys"):
            load_world(json.dumps(doc))

    def test_duplicate_coord(self):
        doc = world_doc()
        doc["cells"].append({"q": 0, "r": 0, "kind": "junction"})
        with pytest.raises(ValidationError, match="duplicate coord"):
            load_world(json.dumps(doc))

    def test_coord_out_of_16bit_range(self):
        doc = world_doc()
        doc["cells"][0]["q"] = 40000
        with pytest.raises(ValidationError, match="16-bit"):
            load_world(json.dumps(doc))

    def test_disconnected_world(self):
        doc = world_doc()
        doc["cells"].append({"q": 10, "r": 10, "kind": "channel"})
        doc["boats"] = []
        with pytest.raises(ValidationError, match="not connected"):
            load_world(json.dumps(doc))

    def test_lock_gate_not_adjacent_names_lock(self):
        doc = world_doc()
        doc["cells"] = [
            {"q": 0, "r": 0, "kind": "channel"},
            {"q": 1, "r": 0, "kind": "lock_chamber"},
            {"q": 2, "r": 0, "kind": "channel"},
            {"q": 3, "r": 0, "kind": "channel"},
        ]
        doc["boats"] = []
        doc["locks"] = [
            {
                "lock_id": 7,
                "chamber": [1, 0],
                "low_gate": [3, 0],
                "high_gate": [2, 0],
                "raise_ticks": 2,
                "lower_ticks": 2,
                "chamber_capacity": 1,
            }
        ]
        with pytest.raises(ValidationError, match="lock 7"):
            load_world(json.dumps(doc))

    def test_chamber_with_extra_passable_neighbor(self):
        doc = world_doc()
        doc["cells"] = [
            {"q": 0, "r": 0, "kind": "channel"},
            {"q": 1, "r": 0, "kind": "lock_chamber"},
            {"q": 2, "r": 0, "kind": "channel"},
            {"q": 1, "r": 1, "kind": "channel"},
        ]
        doc["boats"] = []
        doc["locks"] = [
            {
                "lock_id": 1,
                "chamber": [1, 0],
                "low_gate": [0, 0],
                "high_gate": [2, 0],
                "raise_ticks": 2,
                "lower_ticks": 2,
                "chamber_capacity": 1,
            }
        ]
        with pytest.raises(ValidationError, match="exactly its two gates"):
            load_world(json.dumps(doc))

    def test_boat_over_capacity(self):
        doc = world_doc()
        doc["boats"] = [
            {"id": i, "q": 0, "r": 0, "area": 0, "class": 9} for i in range(1, 4)
        ]
        with pytest.raises(ValidationError, match="capacity"):
            load_world(json.dumps(doc))

    def test_demo_world_cell_count_matches_file(self):
        text = demo_world_text()
        raw = json.loads(text)
        world = load_world(text)
        assert len(world.cells) == len(raw["cells"])
        assert len(world.locks) == 4
        assert len(world.docks) == 4
        assert {d.area_id for d in world.docks} == {0, 1}


class TestRouting:
    def test_straight_channel_routes_east(self):
        doc = world_doc()
        doc["cells"] = [{"q": q, "r": 0, "kind": "channel"} for q in range(4)]
        doc["cells"].append({"q": 4, "r": 0, "kind": "delivery_dock"})
        doc["docks"] = [
            {"coord": [4, 0], "area_id": 0, "dock_class": 5, "role": "delivery", "resource": "coal"}
        ]
        doc["boats"] = []
        world = load_world(json.dumps(doc))
        for q in range(4):
            assert world.routing[(HexCoord(q, 0), 5)] == 0

    def test_tie_breaks_to_lowest_direction_index(self):
        # Two equal-length routes out of (0,0): direction 0 and direction 2.
        cells = [(0, 0), (1, 0), (2, -1), (0, -1), (1, -2), (2, -2)]
        doc = world_doc()
        doc["cells"] = [{"q": q, "r": r, "kind": "channel"} for q, r in cells[:-1]]
        doc["cells"].append({"q": 2, "r": -2, "kind": "delivery_dock"})
        doc["docks"] = [
            {"coord": [2, -2], "area_id": 0, "dock_class": 1, "role": "delivery", "resource": "coal"}
        ]
        doc["boats"] = []
        world = load_world(json.dumps(doc))
        # Both (1,0) [dir 0] and (0,-1) [dir 2] sit at distance 2 from the dock.
        assert world.routing[(HexCoord(0, 0), 1)] == 0

    def test_random_worlds_match_bfs_oracle(self):
        for seed in range(50):
            world = make_random_world(seed)
            for dock in world.docks:
                dist = bfs_distances(world, dock.coord)
                for cell in world.cells:
                    if cell == dock.coord:
                        assert (cell, dock.dock_class) not in world.routing
                        continue
                    direction = world.routing[(cell, dock.dock_class)]
                    walked = walk_length(world, cell, dock.dock_class)
                    assert walked == dist[cell], (seed, cell, dock.dock_class)
                    step_to = neighbors(cell)[direction]
                    assert dist[step_to] == dist[cell] - 1

    def test_routing_strictly_decreases_distance(self):
        world = load_demo_world()
        for dock in world.docks:
            dist = bfs_distances(world, dock.coord)
            for cell in world.cells:
                if cell == dock.coord:
                    continue
                nxt = world.next_cell[dock.dock_class][cell]
                assert dist[nxt] == dist[cell] - 1


class TestSerialization:
    def test_round_trip_demo(self):
        world = load_demo_world()
        again = load_world(serialize_world(world))
        assert again == world
        assert world_hash(again) == world_hash(world)

    def test_round_trip_random(self):
        for seed in (1, 2, 3):
            world = make_random_world(seed)
            again = load_world(serialize_world(world))
            assert again == world

    def test_hash_changes_with_content(self):
        world = load_demo_world()
        doc = json.loads(serialize_world(world))
        doc["slot_capacity"] = 3
        other = load_world(json.dumps(doc))
        assert world_hash(other) != world_hash(world)


def bfs_distances(world, start: HexCoord) -> dict[HexCoord, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for n in neighbors(cur):
            if n in world.cells and n not in dist:
                dist[n] = dist[cur] + 1
                queue.append(n)
    return dist


def walk_length(world, cell: HexCoord, dock_class: int) -> int:
    target = world.dock_of_class[dock_class].coord
    steps = 0
    visited = {cell}
    while cell != target:
        direction = world.routing[(cell, dock_class)]
        off = DIRECTIONS[direction]
        cell = HexCoord(cell.q + off.q, cell.r + off.r)
        steps += 1
        assert cell not in visited, "routing cycle"
        visited.add(cell)
        assert steps <= len(world.cells), "routing does not terminate"
    return steps
