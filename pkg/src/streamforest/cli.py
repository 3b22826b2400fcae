"""Command-line surface: run one scenario, print oracle values, or build the
cross-scheme comparison table.

Exit codes: 0 success, 1 incomplete run (some peer never fully subscribed;
the report is still written), 2 invalid configuration or arguments.
"""

from __future__ import annotations

import argparse
import json
import sys

from .analysis import analyze_config
from .config import PRESETS, ScenarioConfig, load_config, normalize_scheme
from .errors import ConfigInvalidError, IncompleteRunError
from .metrics import emit_comparison, emit_report
from .sim import compare, run_scenario

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_CONFIG = 2


def _load(args) -> ScenarioConfig:
    config = load_config(args.scenario)
    overrides = {}
    if getattr(args, "neighbors", None) is not None:
        overrides["neighbor_count"] = args.neighbors
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return config.with_overrides(**overrides) if overrides else config


def cmd_run(args) -> int:
    config = _load(args)
    scheme = normalize_scheme(args.scheme)
    try:
        report = run_scenario(config, scheme)
    except IncompleteRunError as exc:
        emit_report(exc.report, args.out)
        print(f"error: {exc}", file=sys.stderr)
        print(f"partial report written to {args.out}", file=sys.stderr)
        return EXIT_INCOMPLETE
    emit_report(report, args.out)
    print(
        f"{config.name} scheme={scheme} D={config.neighbor_count} seed={config.seed}: "
        f"avg_saturation={report.avg_saturation:.4f} avg_hops={report.avg_hops:.4f} "
        f"requests={report.requests_total} -> {args.out}"
    )
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = _load(args)
    print(json.dumps(analyze_config(config), indent=2))
    return EXIT_OK


def cmd_compare(args) -> int:
    names = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    configs = [load_config(name) for name in names]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not configs or not seeds:
        raise ConfigInvalidError("compare needs at least one scenario and one seed")
    results = compare(configs, seeds)
    paths = emit_comparison(results, args.out)
    print("\n".join(str(p) for p in paths))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamforest",
        description="Deterministic multi-tree streaming overlay simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario and write its report")
    run.add_argument("--scenario", required=True, help="preset name or JSON config path")
    run.add_argument(
        "--scheme",
        default="economy",
        help="economy (alias: proposed) or baseline",
    )
    run.add_argument("--neighbors", type=int, help="tracker sample size override")
    run.add_argument("--seed", type=int, help="seed override")
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=cmd_run)

    analyze = sub.add_parser("analyze", help="print closed-form oracle values")
    analyze.add_argument("--scenario", required=True)
    analyze.add_argument("--neighbors", type=int, help=argparse.SUPPRESS)
    analyze.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    analyze.set_defaults(func=cmd_analyze)

    cmp_ = sub.add_parser("compare", help="cross-scheme comparison table")
    cmp_.add_argument(
        "--scenarios",
        default=",".join(PRESETS),
        help="comma-separated preset names or config paths",
    )
    cmp_.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    cmp_.add_argument("--out", required=True, help="output directory")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
