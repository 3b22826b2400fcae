"""Shared fixtures: a hand-built nine-peer forest with a fully pinned join
trace, and a disk-cached grid of full-scale simulation cells that the
acceptance tests draw from.

Grid cells are keyed by (scenario, scheme, neighbor multiple, seed) plus a
digest of the package sources, so editing any module invalidates the cache
and repeated pytest runs stay honest without redoing half an hour of
simulation.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest

from streamforest.config import PRESETS
from streamforest.errors import IncompleteRunError
from streamforest.forest import SERVER, Forest, assert_valid
from streamforest.freeset import FreeSet
from streamforest.sim import run_scenario

SEEDS5 = (0, 1, 2, 3, 4)
SEEDS3 = (0, 1, 2)

# Nine peers (server=0, a..h=1..8, joiner=9), all budgets 4, server budget 4.
# Per-tree (parent, child) edges, parents listed before their children.
GOLDEN_EDGES = {
    0: [(0, 5), (5, 1), (5, 4), (5, 6), (1, 2), (4, 3), (6, 7), (6, 8)],
    1: [(0, 1), (1, 2), (1, 3), (1, 4), (4, 5), (4, 6), (5, 7), (7, 8)],
    2: [(0, 7), (7, 3), (7, 4), (7, 8), (3, 1), (3, 2), (3, 5), (3, 6)],
    3: [(0, 6), (6, 2), (6, 8), (2, 1), (2, 3), (2, 4), (2, 5), (4, 7)],
}


def build_golden_forest() -> Forest:
    """Forest where peer 9's join is fully determined: peers 1 and 4 are the
    only backers of tree 0, prices are (2,4,1,1)/(1,1,1,5)/(1,1,5,1)/(2,3,1,2)
    for peers 1..4, peers 1..4 hold one balance unit each, and peer 8 keeps
    four free slots but no balance so the free set stays empty."""
    f = Forest(4, 10, 4)
    for pid in range(1, 10):
        f.register_peer(pid, 4)
    for k, edges in GOLDEN_EDGES.items():
        for parent, child in edges:
            f.attach(child, parent, k)
    f.balance[1:5] = 1
    f.balance[5:9] = 0
    f.balance[SERVER] = 0
    f.rebaseline_money()
    return f


@pytest.fixture
def golden():
    forest = build_golden_forest()
    freeset = FreeSet(forest)
    freeset.sync_all()
    assert_valid(forest, deep=True)
    return forest, freeset


# ---------------------------------------------------------------- grid cache

_SRC = Path(__file__).resolve().parent.parent / "src" / "streamforest"


def _source_digest() -> str:
    h = hashlib.sha256()
    for p in sorted(_SRC.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:12]


class Grid:
    """On-demand full-scale runs with per-cell summary caching."""

    def __init__(self, cache_dir: Path):
        self.cache_dir = cache_dir
        self.digest = _source_digest()
        cache_dir.mkdir(exist_ok=True)

    def cell(self, scenario: str, scheme: str, mult: int, seed: int) -> dict:
        preset = PRESETS[scenario]
        d = mult * preset.num_substreams
        path = self.cache_dir / f"{scenario}_{scheme}_D{d}_s{seed}_{self.digest}.json"
        if path.exists():
            return json.loads(path.read_text())
        cfg = preset.with_overrides(neighbor_count=d, seed=seed)
        try:
            summary = run_scenario(cfg, scheme=scheme).summary_dict()
            summary["aborted"] = False
        except IncompleteRunError as exc:
            summary = exc.report.summary_dict()
            summary["aborted"] = True
        path.write_text(json.dumps(summary))
        return summary

    def mean(self, scenario: str, scheme: str, mult: int, seeds, field: str) -> float:
        vals = [self.cell(scenario, scheme, mult, s)[field] for s in seeds]
        return sum(vals) / len(vals)


@pytest.fixture(scope="session")
def grid():
    return Grid(Path(__file__).resolve().parent / ".grid_cache")
