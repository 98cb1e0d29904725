"""CLI runs: determinism, pacing, record/replay, and summary format."""

from __future__ import annotations

import json
import time
from pathlib import Path

import pytest

from canalsim.cli import (
    RunConfig,
    VersionMismatch,
    WorldMismatch,
    main,
    read_replay_log,
    run,
)
from canalsim.engine import OperateLock
from canalsim.topology import serialize_world
from tests.worldgen import make_lock_lane

GOLDEN = Path(__file__).parent / "golden"


class TestRun:
    def test_repeated_runs_identical_hash(self):
        a = run(RunConfig(demo=True, seed=42, max_ticks=500))
        b = run(RunConfig(demo=True, seed=42, max_ticks=500))
        assert a["final_hash"] == b["final_hash"]
        assert a["final_tick"] == 500

    def test_different_seed_changes_hash(self):
        a = run(RunConfig(demo=True, seed=1, max_ticks=500))
        b = run(RunConfig(demo=True, seed=2, max_ticks=500))
        assert a["final_hash"] != b["final_hash"]

    def test_speed_pacing(self):
        t0 = time.perf_counter()
        run(RunConfig(demo=True, seed=0, max_ticks=50, speed=10.0))
        elapsed = time.perf_counter() - t0
        assert 4.5 <= elapsed <= 5.5, elapsed

    def test_world_source_is_exclusive(self):
        with pytest.raises(ValueError, match="exactly one"):
            run(RunConfig(demo=True, bench=True))
        with pytest.raises(ValueError, match="exactly one"):
            run(RunConfig())

    def test_summary_golden(self):
        summary = run(RunConfig(demo=True, seed=42, max_ticks=300))
        got = [f"{k}={v}" for k, v in summary.items() if k != "ticks_per_sec"]
        want = (GOLDEN / "summary_demo.txt").read_text().splitlines()
        assert got == want
        assert isinstance(summary["ticks_per_sec"], float)

    def test_world_file_option(self, tmp_path):
        world = make_lock_lane(west_len=4, east_len=4, west_boats=1, auto_cycle=True)
        path = tmp_path / "lane.json"
        path.write_text(serialize_world(world))
        summary = run(RunConfig(world_path=str(path), seed=3, max_ticks=100))
        assert summary["world"] == "lock-lane"
        assert summary["final_tick"] == 100


class TestRecordReplay:
    def schedule(self, world, n=20, span=400):
        lock_ids = [lk.lock_id for lk in world.locks]
        import random

        rng = random.Random(9)
        out: dict[int, list[OperateLock]] = {}
        for _ in range(n):
            t = rng.randint(1, span)
            out.setdefault(t, []).append(OperateLock(rng.choice(lock_ids)))
        return out

    def test_record_then_replay_reproduces_hash(self, tmp_path):
        from canalsim.worlds import load_demo_world

        world = load_demo_world()
        log = tmp_path / "session.jsonl"
        schedule = self.schedule(world)
        live = run(
            RunConfig(demo=True, seed=42, max_ticks=500, record_path=str(log)),
            schedule=schedule,
        )
        replayed = run(RunConfig(demo=True, seed=42, max_ticks=500, replay_path=str(log)))
        assert replayed["final_hash"] == live["final_hash"]

    def test_empty_log_replays_clean_run(self, tmp_path):
        log = tmp_path / "empty.jsonl"
        live = run(RunConfig(demo=True, seed=7, max_ticks=200, record_path=str(log)))
        replayed = run(RunConfig(demo=True, seed=7, max_ticks=200, replay_path=str(log)))
        assert replayed["final_hash"] == live["final_hash"]

    def test_shifted_command_changes_hash(self, tmp_path):
        world = make_lock_lane(west_len=5, east_len=12, west_boats=2, auto_cycle=False)
        path = tmp_path / "lane.json"
        path.write_text(serialize_world(world))
        log = tmp_path / "ops.jsonl"
        schedule = {5: [OperateLock(1)], 12: [OperateLock(1)]}
        base = run(
            RunConfig(world_path=str(path), seed=1, max_ticks=16, record_path=str(log)),
            schedule=schedule,
        )
        lines = log.read_text().splitlines()
        entry = json.loads(lines[1])
        entry["tick"] += 1
        lines[1] = json.dumps(entry)
        tampered = tmp_path / "tampered.jsonl"
        tampered.write_text("\n".join(lines) + "\n")
        moved = run(RunConfig(world_path=str(path), seed=1, max_ticks=16, replay_path=str(tampered)))
        assert moved["final_hash"] != base["final_hash"]

    def test_world_mismatch_rejected(self, tmp_path):
        log = tmp_path / "log.jsonl"
        run(RunConfig(demo=True, seed=1, max_ticks=50, record_path=str(log)))
        other = make_lock_lane()
        with pytest.raises(WorldMismatch):
            read_replay_log(str(log), other, 1)

    def test_seed_mismatch_rejected(self, tmp_path):
        from canalsim.worlds import load_demo_world

        log = tmp_path / "log.jsonl"
        run(RunConfig(demo=True, seed=1, max_ticks=50, record_path=str(log)))
        with pytest.raises(WorldMismatch):
            read_replay_log(str(log), load_demo_world(), 2)

    def test_version_mismatch_rejected(self, tmp_path):
        from canalsim.worlds import load_demo_world

        log = tmp_path / "log.jsonl"
        run(RunConfig(demo=True, seed=1, max_ticks=50, record_path=str(log)))
        lines = log.read_text().splitlines()
        header = json.loads(lines[0])
        header["version"] = 99
        lines[0] = json.dumps(header)
        log.write_text("\n".join(lines) + "\n")
        with pytest.raises(VersionMismatch):
            read_replay_log(str(log), load_demo_world(), 1)

    def test_record_and_replay_are_exclusive(self, tmp_path):
        with pytest.raises(ValueError, match="mutually exclusive"):
            run(RunConfig(demo=True, record_path="a", replay_path="b"))


class TestMain:
    def test_demo_exit_zero(self, capsys):
        assert main(["--demo", "--ticks", "50", "--seed", "5"]) == 0
        out = capsys.readouterr().out
        assert "final_hash=" in out
        assert "ticks_per_sec=" in out

    def test_missing_world_file_exit_two(self, capsys):
        assert main(["--world", "/nonexistent/w.json"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_invalid_world_exit_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert main(["--world", str(bad)]) == 2
        assert "error:" in capsys.readouterr().err
