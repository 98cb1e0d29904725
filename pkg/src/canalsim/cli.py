"""Operator entry point: run worlds headless or serving, record and replay.

Summaries are line-oriented key=value pairs so scripts can scrape them.
Record logs are line-delimited JSON: a header naming the world hash, seed
and format version, then one line per applied command with the tick whose
frame first reflects it.  Replaying a log against the same world and seed
reproduces the identical final frame hash.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
import time
from dataclasses import dataclass

from canalsim.engine import Frame, OperateLock, frame_hash, initial_frame, step
from canalsim.topology import World, WorldError, load_world, world_hash
from canalsim.worlds import load_demo_world, make_rect_world

log = logging.getLogger("canalsim.cli")

LOG_FORMAT_VERSION = 1
STARVATION_SAMPLE = 32


class ReplayError(Exception):
    pass


class WorldMismatch(ReplayError):
    pass


class VersionMismatch(ReplayError):
    pass


@dataclass
class RunConfig:
    world_path: str | None = None
    demo: bool = False
    bench: bool = False
    seed: int = 0
    max_ticks: int | None = None
    speed: float | None = None  # ticks per second; None = max
    listen: tuple[str, int] | None = None
    listen_ws: tuple[str, int] | None = None
    record_path: str | None = None
    replay_path: str | None = None


class StarvationTracker:
    """Longest streak of a boat not changing cells, from the engine's exact
    last-moved ledger; sampled every STARVATION_SAMPLE ticks."""

    def __init__(self):
        self.worst = 0

    def update(self, frame: Frame) -> None:
        if frame.tick % STARVATION_SAMPLE:
            return
        self.finish(frame)

    def finish(self, frame: Frame) -> None:
        if frame.last_moved:
            streak = frame.tick - min(frame.last_moved.values())
            if streak > self.worst:
                self.worst = streak


class Recorder:
    def __init__(self, path: str, world: World, seed: int):
        self._fh = open(path, "w", encoding="utf-8")
        header = {"world_hash": f"{world_hash(world):016x}", "seed": seed, "version": LOG_FORMAT_VERSION}
        self._fh.write(json.dumps(header) + "\n")

    def on_command(self, tick: int, session: int, command: OperateLock) -> None:
        line = {"tick": tick, "session": session, "command": {"op": "operate_lock", "lock_id": command.lock_id}}
        self._fh.write(json.dumps(line) + "\n")

    def close(self) -> None:
        self._fh.close()


def read_replay_log(path: str, world: World, seed: int) -> dict[int, list[OperateLock]]:
    """Parse a command log, verifying it matches this world and format."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ReplayError("empty replay log")
    header = json.loads(lines[0])
    if header.get("version") != LOG_FORMAT_VERSION:
        raise VersionMismatch(f"log version {header.get('version')}, expected {LOG_FORMAT_VERSION}")
    want = f"{world_hash(world):016x}"
    if header.get("world_hash") != want:
        raise WorldMismatch(f"log world_hash {header.get('world_hash')} != {want}")
    if header.get("seed") != seed:
        raise WorldMismatch(f"log seed {header.get('seed')} != {seed}")
    schedule: dict[int, list[OperateLock]] = {}
    for ln in lines[1:]:
        entry = json.loads(ln)
        cmd = entry["command"]
        if cmd.get("op") != "operate_lock":
            raise ReplayError(f"unknown command op {cmd.get('op')!r}")
        schedule.setdefault(entry["tick"], []).append(OperateLock(cmd["lock_id"]))
    return schedule


def resolve_world(config: RunConfig) -> World:
    chosen = sum(1 for x in (config.world_path, config.demo, config.bench) if x)
    if chosen != 1:
        raise ValueError("choose exactly one of --world, --demo, --bench")
    if config.demo:
        return load_demo_world()
    if config.bench:
        return make_rect_world(320, 320, name="bench-320x320", boats=64, with_docks=True)
    with open(config.world_path, encoding="utf-8") as fh:
        return load_world(fh.read())


def run(config: RunConfig, schedule: dict[int, list[OperateLock]] | None = None) -> dict:
    """Execute a run and return the summary mapping."""
    if config.record_path and config.replay_path:
        raise ValueError("record and replay are mutually exclusive")
    world = resolve_world(config)
    if config.replay_path:
        if schedule:
            raise ValueError("cannot combine replay with an injected schedule")
        schedule = read_replay_log(config.replay_path, world, config.seed)
    schedule = schedule or {}

    recorder = Recorder(config.record_path, world, config.seed) if config.record_path else None
    tracker = StarvationTracker()
    started = time.perf_counter()
    try:
        if config.listen or config.listen_ws:
            frame, ticks_done = _run_serving(config, world, schedule, recorder, tracker)
        else:
            frame, ticks_done = _run_headless(config, world, schedule, recorder, tracker)
    finally:
        if recorder:
            recorder.close()
    elapsed = max(time.perf_counter() - started, 1e-9)
    tracker.finish(frame)

    summary = {
        "world": world.name,
        "seed": config.seed,
        "ticks": ticks_done,
        "final_tick": frame.tick,
        "final_hash": f"{frame_hash(world, frame):016x}",
    }
    for area in sorted(frame.scores):
        summary[f"score_{area}"] = frame.scores[area]
    summary["starved_max"] = tracker.worst
    summary["ticks_per_sec"] = round(ticks_done / elapsed, 1)
    if config.bench:
        summary["cells"] = len(world.cells)
        summary["cells_per_sec"] = round(len(world.cells) * ticks_done / elapsed, 1)
    return summary


def _run_headless(config, world, schedule, recorder, tracker):
    frame = initial_frame(world, config.seed)
    max_ticks = config.max_ticks if config.max_ticks is not None else _default_ticks(config)
    pace = config.speed
    next_deadline = time.monotonic()
    ticks = 0
    try:
        while ticks < max_ticks:
            effective = frame.tick + 1
            cmds = schedule.get(effective, ())
            if recorder is not None:
                for c in cmds:
                    recorder.on_command(effective, 0, c)
            frame = step(world, frame, cmds)
            ticks += 1
            tracker.update(frame)
            if pace is not None:
                next_deadline += 1.0 / pace
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
    except KeyboardInterrupt:
        log.info("interrupted at tick %d", frame.tick)
    return frame, ticks


def _default_ticks(config) -> int:
    return 3000 if config.bench else 1000


def _run_serving(config, world, schedule, recorder, tracker):
    from canalsim.server import SimulationServer, serve

    server = SimulationServer(
        world,
        seed=config.seed,
        speed=config.speed,
        max_ticks=config.max_ticks,
        on_command=recorder.on_command if recorder else None,
        scheduled=schedule,
        on_tick=tracker.update,
    )

    async def main():
        try:
            await serve(server, config.listen, config.listen_ws, None)
        except asyncio.CancelledError:
            pass

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        log.info("interrupted at tick %d", server.frame.tick)
    return server.frame, server.ticks_stepped


def parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def parse_speed(text: str) -> float | None:
    if text == "max":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"speed must be a number or 'max', got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("speed must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="canalsim",
        description="Deterministic canal traffic simulator with locus streaming.",
    )
    p.add_argument("--world", metavar="PATH", help="world file to load")
    p.add_argument("--demo", action="store_true", help="run the bundled figure-eight world")
    p.add_argument("--bench", action="store_true", help="run the synthetic benchmark world")
    p.add_argument("--seed", type=int, default=0, metavar="N")
    p.add_argument("--ticks", type=int, default=None, metavar="N", help="stop after N ticks")
    p.add_argument("--speed", type=parse_speed, default=None, metavar="N|max",
                   help="target ticks per second (default: max)")
    p.add_argument("--listen", type=parse_addr, default=None, metavar="ADDR", help="TCP listener, e.g. 0.0.0.0:4501")
    p.add_argument("--listen-ws", type=parse_addr, default=None, metavar="ADDR", help="WebSocket listener, e.g. 0.0.0.0:4502")
    p.add_argument("--record", metavar="PATH", help="write applied commands to a log")
    p.add_argument("--replay", metavar="PATH", help="re-run a recorded command log")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("NBCA_LOG", "WARNING").upper(),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    config = RunConfig(
        world_path=args.world,
        demo=args.demo,
        bench=args.bench,
        seed=args.seed,
        max_ticks=args.ticks,
        speed=args.speed,
        listen=args.listen,
        listen_ws=args.listen_ws,
        record_path=args.record,
        replay_path=args.replay,
    )
    try:
        summary = run(config)
    except (ValueError, OSError, ReplayError, WorldError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for key, value in summary.items():
        print(f"{key}={value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
