from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import pytest

from ppco.store import load_cyclone_fixture

DATA = Path(__file__).parent / "data"
ROOT = "381009"

# Published per-viewpoint batch grants, transcribed by hand (not read from the corpus).
VP01_GRANTS = [
    ("Artifact", 1), ("Function", 2), ("Behavior", 2), ("Flows", 2), ("Geometry-Form", 1),
    ("Sub-Artifact", 2), ("Assembly", 2), ("Constraints", 1), ("Requirements", 2), ("Group", 1),
]
VP02_GRANTS = [
    ("Mechanic", 1), ("Artifact", 2), ("Function", 2), ("Behavior", 2), ("Flows", 3),
    ("Geometry-Form", 2), ("Sub-Artifact", 3), ("Assembly", 3), ("Constraints", 1),
    ("Requirements", 3), ("Group", 1),
]
# Expected merge for ActorX, frozen from brute_force_merge(VP01_GRANTS, VP02_GRANTS).
ACTORX_MERGED = [
    ("Mechanic", 1), ("Artifact", 1), ("Function", 2), ("Behavior", 2), ("Flows", 2),
    ("Geometry-Form", 1), ("Sub-Artifact", 2), ("Assembly", 2), ("Constraints", 1),
    ("Requirements", 2), ("Group", 1),
]


def brute_force_merge(*grant_lists):
    """Oracle: per batch kind, the minimum level over every list that mentions it."""
    best: dict[str, int] = {}
    for grants in grant_lists:
        for kind, level in grants:
            best[kind] = min(level, best.get(kind, level))
    return best


def as_pairs(conns):
    return [(c.batch_kind, c.level) for c in conns]


class FixedClock:
    """Deterministic clock advancing one second per reading."""

    def __init__(self, start=datetime(2026, 1, 5, 9, 0, 0, tzinfo=timezone.utc)):
        self.now = start

    def __call__(self):
        from datetime import timedelta

        current = self.now
        self.now = current + timedelta(seconds=1)
        return current


@pytest.fixture
def cyclone():
    return load_cyclone_fixture()


@pytest.fixture
def clock():
    return FixedClock()
