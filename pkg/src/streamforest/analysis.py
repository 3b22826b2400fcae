"""Closed-form capacity and shape oracles, plus an explicit ideal forest.

The ideal forest packs peers into complete N-ary trees headed by the server's
slots; it is the ground truth that the per-level uploader formula and the
average hop bound are tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import ScenarioConfig
from .errors import DegenerateInputError
from .forest import Forest


def max_streaming_rate(server_capacity: float, peer_capacities) -> float:
    """Fluid upper bound on the achievable rate: the server can neither exceed
    its own upload nor the population-average upload (server included)."""
    caps = list(peer_capacities)
    n = len(caps)
    if n == 0:
        raise DegenerateInputError("need at least one peer")
    if server_capacity < 0 or any(c < 0 for c in caps):
        raise DegenerateInputError("capacities must be >= 0")
    return min(server_capacity, (server_capacity + sum(caps)) / n)


def resource_index(config: ScenarioConfig) -> float:
    """Total system capacity over (stream rate x population)."""
    supply = config.server_budget + config.n * config.mean_budget
    return supply / (config.stream_rate * config.n)


def optimal_depth(n: int, num_trees: int) -> int:
    """Smallest depth d whose complete tree holds n peers: the d with
    sum_{i=1..d-1} N^{i-1} < n <= sum_{i=1..d} N^{i-1}."""
    if n < 1:
        raise DegenerateInputError("need at least one peer")
    if num_trees < 2:
        return n  # degenerate chain: one child per level
    d = 0
    cum = 0
    width = 1
    while cum < n:
        d += 1
        cum += width
        width *= num_trees
    return d


def optimal_uploaders_per_level(n: int, num_trees: int, level: int) -> int:
    """Uploaders (peers with children) at a given level, summed over all trees,
    in the ideal packing. Levels outside [1, depth) hold only leaves."""
    if n < 1:
        raise DegenerateInputError("need at least one peer")
    if level < 1:
        return 0
    if num_trees < 2:
        return 1 if level <= n - 1 else 0
    cum = (num_trees ** level - 1) // (num_trees - 1)  # peers at levels 1..level
    below = n - cum
    if below <= 0:
        return 0
    return num_trees * min(num_trees ** (level - 1), math.ceil(below / num_trees))


@dataclass
class OptimalForest:
    """Ideal level occupancy: each tree is a complete N-ary tree headed by the
    server slots dealt round-robin (every tree gets at least one head)."""

    n: int
    num_trees: int
    server_slots: int

    def __post_init__(self):
        if self.n < 1 or self.num_trees < 1 or self.server_slots < 1:
            raise DegenerateInputError("n, num_trees, server_slots must be >= 1")
        base, extra = divmod(self.server_slots, self.num_trees)
        self.heads = [max(1, base + (1 if k < extra else 0)) for k in range(self.num_trees)]
        # occupancy[k][l-1] = peers at depth l of tree k
        self.occupancy: list[list[int]] = []
        for h in self.heads:
            left = self.n
            width = h
            occ = []
            while left > 0:
                take = min(width, left)
                occ.append(take)
                left -= take
                width *= self.num_trees
            self.occupancy.append(occ)

    @property
    def depth(self) -> int:
        return max(len(occ) for occ in self.occupancy)

    def uploaders_at(self, level: int) -> int:
        """Peers at this level with at least one child, summed over trees."""
        if level < 1:
            return 0
        total = 0
        for occ in self.occupancy:
            if level < len(occ):
                total += math.ceil(occ[level] / self.num_trees) if self.num_trees > 1 else 1
        return total

    def avg_hop(self) -> float:
        total = 0
        for occ in self.occupancy:
            total += sum(level * count for level, count in enumerate(occ, start=1))
        return total / (self.n * self.num_trees)

    def build_forest(self) -> Forest:
        """Materialize the packing as a real forest (peers placed level by
        level, each tree filled independently); used as a cross-check oracle."""
        f = Forest(self.num_trees, self.n + 1, max(self.server_slots, self.num_trees))
        # a peer can be interior in every tree at once
        budget = self.num_trees * self.num_trees
        for pid in range(1, self.n + 1):
            f.register_peer(pid, budget)
        for k, occ in enumerate(self.occupancy):
            prev_level = [0]  # parents available at the level above (server first)
            next_id = 1
            cap = self.heads[k]
            for count in occ:
                level_ids = list(range(next_id, next_id + count))
                next_id += count
                for idx, pid in enumerate(level_ids):
                    f.attach(pid, prev_level[idx // cap], k)
                prev_level = level_ids
                cap = self.num_trees
        f.rebaseline_money()
        return f


def optimal_avg_hop(n: int, num_trees: int, server_slots: int) -> float:
    """Mean hop count over all peers and trees in the ideal packing."""
    return OptimalForest(n, num_trees, server_slots).avg_hop()


def analyze_config(config: ScenarioConfig) -> dict:
    """All oracle values for one scenario, JSON-friendly."""
    from .sim import class_counts

    counts = class_counts(config)
    caps: list[int] = []
    for (budget, _frac), count in zip(config.peer_classes, counts):
        caps.extend([budget] * count)
    levels = [
        optimal_uploaders_per_level(config.n, config.num_substreams, level)
        for level in range(1, optimal_depth(config.n, config.num_substreams) + 1)
    ]
    return {
        "scenario": config.name,
        "n": config.n,
        "num_substreams": config.num_substreams,
        "max_streaming_rate": max_streaming_rate(config.server_budget, caps),
        "resource_index": resource_index(config),
        "optimal_depth": optimal_depth(config.n, config.num_substreams),
        "optimal_avg_hop": optimal_avg_hop(
            config.n, config.num_substreams, config.server_budget
        ),
        "optimal_uploaders_per_level": levels,
    }
