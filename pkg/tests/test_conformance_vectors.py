"""The committed browser-client conformance vectors match this build."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).parent.parent
VECTORS = ROOT / "frontend" / "test" / "vectors"
GENERATOR = ROOT / "tools" / "make_conformance_vectors.py"


def test_vectors_regenerate_identically(tmp_path):
    subprocess.run(
        [sys.executable, str(GENERATOR), str(tmp_path)],
        check=True,
        cwd=ROOT,
        capture_output=True,
    )
    committed = sorted(p.name for p in VECTORS.iterdir())
    regenerated = sorted(p.name for p in tmp_path.iterdir())
    assert committed == regenerated
    for name in committed:
        assert (tmp_path / name).read_bytes() == (VECTORS / name).read_bytes(), name
