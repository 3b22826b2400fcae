#!/usr/bin/env python3
"""Rebuild the headline result tables from scratch.

Runs every preset scenario under both schemes at the default tracker widths,
plus the closed-form oracle values, and writes everything under --out
(comparison.json, compare_saturation.csv, compare_hops.csv, analyze.json).

This is the long way around: a fresh n=10000 run takes tens of seconds and
the full grid is about a hundred runs. Use --seeds and --scenarios to cut the
grid down while iterating.
"""

import argparse
import json
from pathlib import Path

from streamforest.analysis import analyze_config
from streamforest.config import PRESETS, load_config
from streamforest.metrics import emit_comparison
from streamforest.sim import compare


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="tables", help="output directory")
    parser.add_argument(
        "--scenarios",
        default=",".join(PRESETS),
        help="comma-separated preset names or config paths",
    )
    parser.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    args = parser.parse_args()

    configs = [load_config(s) for s in args.scenarios.split(",") if s]
    seeds = [int(s) for s in args.seeds.split(",") if s]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    oracle = {c.name: analyze_config(c) for c in configs}
    (out / "analyze.json").write_text(json.dumps(oracle, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'analyze.json'}")

    results = compare(configs, seeds)
    for path in emit_comparison(results, out):
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
