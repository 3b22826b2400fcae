"""Scenario runner: seeded budgets and join order, tracker sampling, the
single-retry queue, per-join validation, and cross-scheme comparison runs.

All randomness flows from one generator seeded by the config, consumed in a
fixed order (budget shuffle, join order, scheme internals, per-join tracker
draws), so a (config, scheme) pair fully determines every output byte.
"""

from __future__ import annotations

import json
from collections import deque

import numpy as np

from .baseline import BaselineEngine
from .config import SCHEME_ECONOMY, ScenarioConfig, normalize_scheme
from .errors import (
    FreeSetExhaustedError,
    IncompleteRunError,
    SpareGroupExhaustedError,
    ValidationFailedError,
)
from .forest import SERVER, Forest, validate_forest
from .freeset import FreeSet
from .metrics import MetricsReport, collect_report
from .scheduler import JoinScheduler


def class_counts(config: ScenarioConfig) -> list[int]:
    """Apportion n over the class fractions by largest remainder, so the
    realized budget mix is exact rather than a random draw."""
    exact = [frac * config.n for _, frac in config.peer_classes]
    counts = [int(x) for x in exact]
    leftover = config.n - sum(counts)
    by_remainder = sorted(
        range(len(exact)), key=lambda i: (-(exact[i] - counts[i]), i)
    )
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def assign_budgets(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Budget for peer i at index i-1; exact class quotas, shuffled once."""
    counts = class_counts(config)
    budgets = np.repeat([b for b, _ in config.peer_classes], counts).astype(np.int64)
    rng.shuffle(budgets)
    return budgets


def tracker_sample(joined, count: int, rng: np.random.Generator) -> list[int]:
    """`count` distinct peers from the joined population; while the population
    is still smaller than that, everyone plus the server."""
    if len(joined) < count:
        return list(joined) + [SERVER]
    picked = rng.choice(np.asarray(joined, dtype=np.int64), size=count, replace=False)
    return [int(x) for x in picked]


def run_scenario(config: ScenarioConfig, scheme: str = SCHEME_ECONOMY) -> MetricsReport:
    """Join the whole population one peer at a time and measure the result.

    A join that runs out of reachable slots keeps its partial subscriptions
    and is re-queued once at the end of the join order (by then all remaining
    capacity has arrived, which a short fixed delay cannot guarantee). Peers
    that fail their retry are reported and the run raises IncompleteRunError
    with the report attached.
    """
    config.validate()
    scheme = normalize_scheme(scheme)
    rng = np.random.default_rng(config.seed)
    budgets = assign_budgets(config, rng)
    order = [int(p) + 1 for p in rng.permutation(config.n)]

    forest = Forest(config.num_substreams, config.n + 1, config.server_budget)
    for pid in range(1, config.n + 1):
        forest.register_peer(pid, int(budgets[pid - 1]))

    if scheme == SCHEME_ECONOMY:
        freeset = FreeSet(forest)
        engine = None
        join = JoinScheduler(forest, freeset, rng).join
    else:
        freeset = None
        engine = BaselineEngine(forest, rng)
        join = engine.join

    joined: list[int] = []
    lines: list[str] = []
    requesters: set[int] = set()
    retried: list[int] = []
    incomplete: list[int] = []

    queue = deque((pid, False) for pid in order)
    while queue:
        pid, is_retry = queue.popleft()
        sample = tracker_sample(joined, config.neighbor_count, rng)
        try:
            report, receipts = join(pid, sample)
        except (FreeSetExhaustedError, SpareGroupExhaustedError) as exc:
            report, receipts = exc.report, exc.receipts
        report.retried = is_retry
        lines.extend(json.dumps(r.to_json()) for r in receipts)
        lines.append(json.dumps(report.to_json()))
        if report.freeset_requests > 0:
            requesters.add(pid)
        if report.completed:
            joined.append(pid)
        elif is_retry:
            incomplete.append(pid)
        else:
            retried.append(pid)
            queue.append((pid, True))
        violations = validate_forest(forest)
        if violations:
            raise ValidationFailedError(violations)

    if scheme == SCHEME_ECONOMY:
        requests_total = freeset.find_requests
        requesting_peers = len(requesters)
        messages = {
            "freeset_join": freeset.join_messages,
            "freeset_leave": freeset.leave_messages,
            "freeset_update": freeset.update_messages,
            "find_hops": freeset.find_hops,
        }
    else:
        requests_total = engine.spare_requests
        requesting_peers = engine.requesting_peer_count()
        messages = {"cascades": engine.cascades, "evictions": engine.evictions}

    result = collect_report(
        config=config,
        scheme=scheme,
        forest=forest,
        requests_total=requests_total,
        requesting_peers=requesting_peers,
        retried_peers=retried,
        incomplete_peers=incomplete,
        protocol_messages=messages,
        lines=lines,
    )
    if incomplete:
        raise IncompleteRunError(
            f"{len(incomplete)} peers still unsubscribed after retries", report=result
        )
    return result


# ------------------------------------------------------------------ compare


def _aggregate(values: list[float | None]) -> dict:
    known = [v for v in values if v is not None]
    if not known:
        return {"mean": None, "spread": None, "values": values}
    return {
        "mean": float(np.mean(known)),
        "spread": float((max(known) - min(known)) / 2),
        "values": values,
    }


def _run_cell(config: ScenarioConfig, scheme: str, d: int, seeds) -> dict:
    sats, hops, fracs, failed = [], [], [], []
    for seed in seeds:
        cfg = config.with_overrides(seed=int(seed), neighbor_count=int(d))
        try:
            rep = run_scenario(cfg, scheme)
        except IncompleteRunError as exc:
            rep = exc.report
            failed.append(int(seed))
        sats.append(rep.avg_saturation)
        hops.append(rep.avg_hops)
        fracs.append(rep.requesting_fraction)
    return {
        "scheme": scheme,
        "neighbor_count": int(d),
        "avg_saturation": _aggregate(sats),
        "avg_hops": _aggregate(hops),
        "requesting_fraction": _aggregate(fracs),
        "failed_seeds": failed,
    }


def compare(configs, seeds, d_multiples=(1, 2, 4)) -> dict:
    """Scenario x column grid: one baseline column (widest tracker) plus one
    economy column per tracker-width multiple, every cell averaged over seeds.

    A seed whose run ends incomplete still contributes its partial metrics
    and is listed in the cell's failed_seeds.
    """
    out = {"seeds": [int(s) for s in seeds], "rows": []}
    for config in configs:
        n_trees = config.num_substreams
        columns = [_run_cell(config, "baseline", max(d_multiples) * n_trees, seeds)]
        columns += [
            _run_cell(config, SCHEME_ECONOMY, m * n_trees, seeds) for m in d_multiples
        ]
        out["rows"].append(
            {
                "scenario": config.name,
                "n": config.n,
                "num_substreams": n_trees,
                "columns": columns,
            }
        )
    return out
