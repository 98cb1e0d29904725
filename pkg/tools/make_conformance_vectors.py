"""Generate shared snapshot/delta conformance vectors for the browser client.

Runs the demo world with a locus over a busy lock, captures the wire frames
a consumer would receive (one full snapshot, then deltas), and writes the
expected reconstructed cell state alongside.  The browser client's decoder
must reconstruct the identical state; a companion pytest guards the vectors
against drift.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from canalsim import wire
from canalsim.engine import initial_frame, step
from canalsim.hexgrid import HexCoord
from canalsim.locus import CellRecord, Locus, apply_delta, encode_delta, extract
from canalsim.server import world_meta
from canalsim.worlds import load_demo_world


def snapshot_rows(snap, world):
    rows = []
    for rec_bytes in snap.records:
        rec = CellRecord.unpack(rec_bytes)
        rows.append(
            {
                "q": rec.q,
                "r": rec.r,
                "kind": rec.kind,
                "lock_phase": rec.lock_phase,
                "occupancy": rec.occupancy,
                "slots": [list(s) if s else None for s in rec.slots],
            }
        )
    return rows


def main() -> None:
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "frontend/test/vectors")
    out_dir.mkdir(parents=True, exist_ok=True)

    world = load_demo_world()
    seed = 1234
    frame = initial_frame(world, seed)
    locus = Locus(7, HexCoord(-4, 3), 3, 2)  # covers the west ring lock

    frames = []
    meta_msg = world_meta(world)
    frames.append(("world_meta.bin", wire.encode(meta_msg)))

    prev = None
    emitted = []
    tick_of = []
    while len(emitted) < 6:
        if frame.tick % locus.stride == 0:
            snap = extract(frame, world, locus)
            if prev is None:
                emitted.append(("snapshot", snap))
            else:
                emitted.append(("delta", encode_delta(prev, snap)))
            prev = snap
            tick_of.append(frame.tick)
        frame = step(world, frame)

    reconstructed = None
    for i, (kind, payload) in enumerate(emitted):
        blob = b"".join(payload.records)
        if kind == "snapshot":
            msg = wire.LocusSnapshotMsg(locus.locus_id, payload.tick, len(payload.records), blob)
            reconstructed = payload
        else:
            msg = wire.LocusDeltaMsg(locus.locus_id, payload.tick, len(payload.records), blob)
            reconstructed = apply_delta(reconstructed, payload)
        frames.append((f"emission_{i}.bin", wire.encode(msg)))

    for name, data in frames:
        (out_dir / name).write_bytes(data)

    manifest = {
        "slot_capacity": world.slot_capacity,
        "locus_id": locus.locus_id,
        "emissions": [name for name, _ in frames[1:]],
        "final_tick": reconstructed.tick,
        "expected_cells": snapshot_rows(reconstructed, world),
        "scores": sorted(world.areas),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    print(f"wrote {len(frames)} frames + manifest to {out_dir}")


if __name__ == "__main__":
    main()
