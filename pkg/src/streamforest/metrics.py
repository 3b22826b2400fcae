"""Per-run metrics: per-peer values, their CDFs, and the report files.

A run produces exactly five files in its output directory:
summary.json, cdf_saturation.csv, cdf_hops.csv, uploaders_per_level.csv,
receipts.jsonl. Numbers in CSVs are formatted to 6 significant digits so
reruns with the same inputs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import optimal_depth, optimal_uploaders_per_level
from .forest import Forest


def distribution(values) -> list[tuple[float, float]]:
    """CDF support points: (value, fraction of samples <= value), ascending."""
    arr = np.asarray(sorted(values), dtype=float)
    if arr.size == 0:
        return []
    vals, counts = np.unique(arr, return_counts=True)
    cum = np.cumsum(counts) / arr.size
    return list(zip(vals.tolist(), cum.tolist()))


def _fmt(x: float) -> str:
    return f"{x:.6g}"


@dataclass
class MetricsReport:
    """Everything a finished (or abandoned) run knows about itself."""

    scenario: str
    scheme: str
    neighbor_count: int
    seed: int
    n: int
    num_substreams: int
    saturation_values: list[float]        # per peer, zero-budget peers excluded
    hop_values: list[float]               # per fully subscribed peer, mean over trees
    requests_total: int
    requesting_peers: int                 # peers that issued >= 1 request
    uploaders_per_level: list[tuple[int, int, int]]   # (level, count, optimal)
    retried_peers: list[int]
    incomplete_peers: list[int]
    free_slots: int
    max_depth: int
    protocol_messages: dict[str, int] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)    # receipts.jsonl content
    forest: Forest | None = field(default=None, repr=False)

    @property
    def avg_saturation(self) -> float | None:
        if not self.saturation_values:
            return None
        return float(np.mean(self.saturation_values))

    @property
    def avg_hops(self) -> float | None:
        if not self.hop_values:
            return None
        return float(np.mean(self.hop_values))

    @property
    def requesting_fraction(self) -> float:
        return self.requesting_peers / self.n if self.n else 0.0

    def summary_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "scheme": self.scheme,
            "neighbor_count": self.neighbor_count,
            "seed": self.seed,
            "n": self.n,
            "num_substreams": self.num_substreams,
            "avg_saturation": self.avg_saturation,
            "avg_hops": self.avg_hops,
            "requests_total": self.requests_total,
            "requesting_peers": self.requesting_peers,
            "requesting_fraction": self.requesting_fraction,
            "retries": len(self.retried_peers),
            "retried_peers": self.retried_peers,
            "incomplete_peers": self.incomplete_peers,
            "free_slots": self.free_slots,
            "max_depth": self.max_depth,
            "protocol_messages": self.protocol_messages,
        }


def collect_report(
    *,
    config,
    scheme: str,
    forest: Forest,
    requests_total: int,
    requesting_peers: int,
    retried_peers: list[int],
    incomplete_peers: list[int],
    protocol_messages: dict[str, int],
    lines: list[str],
) -> MetricsReport:
    """Assemble per-peer metrics from the final forest state."""
    n_trees = forest.num_trees
    peer = forest.peer_mask
    budget = forest.budget

    with_budget = peer & (budget > 0)
    dominant = forest.children_count.max(axis=0)
    saturation = (dominant[with_budget] / budget[with_budget]).tolist()

    full = peer & (forest.sub_count == n_trees)
    hops = forest.depth[:, full].mean(axis=0).tolist()

    max_level = max(forest.max_depth, optimal_depth(config.n, n_trees))
    counts = np.zeros(max_level + 1, dtype=np.int64)
    for k in range(n_trees):
        uploader = peer & (forest.children_count[k] > 0)
        if uploader.any():
            counts += np.bincount(
                forest.depth[k][uploader], minlength=max_level + 1
            )[: max_level + 1]
    levels = [
        (lvl, int(counts[lvl]), optimal_uploaders_per_level(config.n, n_trees, lvl))
        for lvl in range(1, max_level + 1)
    ]

    return MetricsReport(
        scenario=config.name,
        scheme=scheme,
        neighbor_count=config.neighbor_count,
        seed=config.seed,
        n=config.n,
        num_substreams=n_trees,
        saturation_values=saturation,
        hop_values=hops,
        requests_total=requests_total,
        requesting_peers=requesting_peers,
        uploaders_per_level=levels,
        retried_peers=sorted(retried_peers),
        incomplete_peers=sorted(incomplete_peers),
        free_slots=forest.free_slots_total(),
        max_depth=forest.max_depth,
        protocol_messages=dict(sorted(protocol_messages.items())),
        lines=lines,
        forest=forest,
    )


def emit_report(report: MetricsReport, out_dir) -> list[Path]:
    """Write the five run files; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    p = out / "summary.json"
    p.write_text(json.dumps(report.summary_dict(), indent=2, sort_keys=True) + "\n")
    paths.append(p)

    for name, values in (
        ("cdf_saturation.csv", report.saturation_values),
        ("cdf_hops.csv", report.hop_values),
    ):
        p = out / name
        rows = ["value,cum_fraction"]
        rows += [f"{_fmt(v)},{_fmt(c)}" for v, c in distribution(values)]
        p.write_text("\n".join(rows) + "\n")
        paths.append(p)

    p = out / "uploaders_per_level.csv"
    rows = ["level,count,optimal_count"]
    rows += [f"{lvl},{cnt},{opt}" for lvl, cnt, opt in report.uploaders_per_level]
    p.write_text("\n".join(rows) + "\n")
    paths.append(p)

    p = out / "receipts.jsonl"
    p.write_text("".join(line + "\n" for line in report.lines))
    paths.append(p)
    return paths


def _cell_text(cell: dict, key: str) -> str:
    agg = cell[key]
    if agg["mean"] is None:
        return "failed"
    text = f"{agg['mean']:.4f}±{agg['spread']:.4f}"
    if cell["failed_seeds"]:
        text += "*"    # some seed ended incomplete; see comparison.json
    return text


def emit_comparison(results: dict, out_dir) -> list[Path]:
    """Write comparison.json plus one CSV table per headline metric."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = out / "comparison.json"
    p.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    paths = [p]
    for fname, key in (
        ("compare_saturation.csv", "avg_saturation"),
        ("compare_hops.csv", "avg_hops"),
    ):
        rows = []
        for row in results["rows"]:
            if not rows:
                labels = ["baseline"] + [
                    f"D={c['neighbor_count'] // row['num_substreams']}N"
                    for c in row["columns"][1:]
                ]
                rows.append("scenario," + ",".join(labels))
            rows.append(
                row["scenario"]
                + ","
                + ",".join(_cell_text(c, key) for c in row["columns"])
            )
        p = out / fname
        p.write_text("\n".join(rows or ["scenario"]) + "\n")
        paths.append(p)
    return paths
