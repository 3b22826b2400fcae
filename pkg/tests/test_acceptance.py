"""The ten headline acceptance checks, one printed PASS/FAIL line each.

Full-scale cells (n=10000) come from the session grid cache in conftest, so
the first run costs real simulation time and later runs are cheap unless the
package sources change. Checks that probe runtime invariants or byte-level
determinism always run fresh.
"""

import json

import numpy as np
import pytest

from conftest import SEEDS3, SEEDS5
from oracles import capacity_multisets, lp_streaming_rate

import streamforest.sim as simmod
from streamforest.analysis import (
    OptimalForest,
    max_streaming_rate,
    optimal_avg_hop,
    optimal_uploaders_per_level,
)
from streamforest.config import PRESETS
from streamforest.errors import IncompleteRunError
from streamforest.forest import validate_forest
from streamforest.freeset import FreeSet
from streamforest.metrics import emit_report
from streamforest.scheduler import JoinScheduler
from streamforest.sim import assign_budgets, run_scenario

HM = ("HM4-1", "HM4-2", "HM8-1", "HM8-2")
HT = ("HT4-1", "HT4-2", "HT8-1", "HT8-2")
ALL = HM + HT


def seeds_for(scenario):
    return SEEDS5 if scenario in HM else SEEDS3


def finish(capsys, num, text, problems):
    """One visible verdict line per check, printed past pytest's capture."""
    ok = not problems
    with capsys.disabled():
        print(f"\n[criterion {num:02d}] {'PASS' if ok else 'FAIL'} {text}",
              flush=True)
    assert ok, f"criterion {num}: " + "; ".join(str(p) for p in problems[:20])


# --------------------------------------------------------------------- 1


def test_criterion_01_pinned_join_trace(golden, capsys):
    problems = []
    f, fs = golden
    report, receipts = JoinScheduler(f, fs, np.random.default_rng(0)).join(9, {1, 4})
    got = [(r.kind, r.payer, r.payee, r.payment, r.tree, r.transferred_children)
           for r in receipts]
    want = [
        ("buy", 9, 1, 2, 0, (2,)),
        ("adopt", 1, 9, 0, 1, ()),
        ("swap", 9, 4, 1, 0, (3,)),
        ("buy", 9, 4, 1, 2, ()),
        ("adopt", 4, 9, 0, 3, ()),
    ]
    if got != want:
        problems.append(f"receipts {got} != {want}")
    if report.payments != [2, 1, 1]:
        problems.append(f"payments {report.payments}")
    if int(f.balance[9]) != 0:
        problems.append(f"joiner balance {int(f.balance[9])}")
    if int(f.children_count[0][9]) != 3 or int(f.children_count[2][9]) != 1:
        problems.append("joiner child counts off")
    if len(receipts) != 5:
        problems.append("extra top-up moves happened")
    if validate_forest(f, deep=True):
        problems.append("forest invalid after trace")
    finish(capsys, 1, "pinned nine-peer join trace reproduced move for move", problems)


# --------------------------------------------------------------------- 2


def test_criterion_02_no_lookups_in_uniform_scenarios(grid, capsys):
    problems = []
    for sc in HM:
        for seed in SEEDS5:
            cell = grid.cell(sc, "economy", 4, seed)
            if cell["requests_total"] != 0:
                problems.append(f"{sc} seed {seed}: {cell['requests_total']} lookups")
    finish(capsys, 2, "zero directory lookups in all uniform-population runs "
              "(4 scenarios x 5 seeds, n=10000, widest tracker)", problems)


# --------------------------------------------------------------------- 3


def test_criterion_03_hop_means_in_band(grid, capsys):
    problems = []
    h8 = grid.mean("HM8-1", "economy", 4, SEEDS5, "avg_hops")
    h4 = grid.mean("HM4-1", "economy", 4, SEEDS5, "avg_hops")
    if not (5.465 <= h8 <= 5.80):
        problems.append(f"HM8-1 mean hops {h8:.4f} outside [5.465, 5.80]")
    if not (7.27 <= h4 <= 7.70):
        problems.append(f"HM4-1 mean hops {h4:.4f} outside [7.27, 7.70]")
    finish(capsys, 3, f"hop means near ideal (HM8-1 {h8:.4f}, HM4-1 {h4:.4f})", problems)


# --------------------------------------------------------------------- 4


def test_criterion_04_saturation_targets(grid, capsys):
    problems = []
    targets = {"HM4-1": 0.96, "HM8-1": 0.94, "HT4-1": 0.96, "HT8-1": 0.94}
    measured = {}
    for sc, want in targets.items():
        got = grid.mean(sc, "economy", 4, seeds_for(sc), "avg_saturation")
        measured[sc] = got
        if abs(got - want) > 0.05:
            problems.append(f"{sc}: {got:.4f} not within 0.05 of {want}")
    text = ", ".join(f"{sc} {v:.3f}" for sc, v in measured.items())
    finish(capsys, 4, f"saturation within 0.05 of targets ({text})", problems)


# --------------------------------------------------------------------- 5


def test_criterion_05_saturation_monotone_in_tracker_width(grid, capsys):
    problems = []
    for sc in ALL:
        sats = [grid.mean(sc, "economy", m, SEEDS3, "avg_saturation")
                for m in (1, 2, 4)]
        if not (sats[0] <= sats[1] <= sats[2]):
            problems.append(f"{sc}: {['%.4f' % s for s in sats]} not non-decreasing")
    half = grid.mean("HM4-2", "economy", 4, SEEDS5, "avg_saturation")
    full = grid.mean("HM4-1", "economy", 4, SEEDS5, "avg_saturation")
    if not (half < full):
        problems.append(f"HM4-2 {half:.4f} not below HM4-1 {full:.4f}")
    finish(capsys, 5, "saturation non-decreasing in tracker width for all 8 scenarios; "
              "freerider mix strictly lower", problems)


# --------------------------------------------------------------------- 6


def test_criterion_06_closed_forms_match_oracles(capsys):
    problems = []
    checked = 0
    for n_peers in range(1, 7):
        for caps in capacity_multisets(n_peers, 4):
            for us in range(1, 5):
                want = lp_streaming_rate(us, caps)
                got = max_streaming_rate(us, caps)
                checked += 1
                if abs(got - want) > 1e-6:
                    problems.append(f"rate({us}, {caps}) = {got} vs LP {want}")
    if checked != 1844:
        problems.append(f"LP sweep covered {checked} configs, expected 1844")

    for n in range(10, 5001, 37):
        for num_trees in (2, 4, 8):
            packing = OptimalForest(n, num_trees, num_trees)
            for level in range(1, packing.depth + 2):
                a = optimal_uploaders_per_level(n, num_trees, level)
                b = packing.uploaders_at(level)
                if a != b:
                    problems.append(
                        f"uploaders(n={n}, N={num_trees}, level={level}): {a} vs {b}"
                    )

    for args, want in (((10_000, 8, 8), 5.4651), ((10_000, 4, 4), 7.2721)):
        got = optimal_avg_hop(*args)
        if abs(got - want) > 1e-4:
            problems.append(f"optimal_avg_hop{args} = {got:.6f} vs {want}")
    finish(capsys, 6, "closed forms match exhaustive flow LP (1844 configs), the packing "
              "construction (n up to 5000), and the frozen hop values", problems)


# --------------------------------------------------------------------- 7


class _CheckingFreeSet(FreeSet):
    """Instrumented directory: records any message-bound violation."""

    instances: list = []

    def __init__(self, forest):
        super().__init__(forest)
        self.bound_failures: list[str] = []
        self.enroll_events = 0
        self.find_events = 0
        _CheckingFreeSet.instances.append(self)

    def _enroll_cap(self):
        return self.forest.num_trees * max(1, self.forest.max_depth)

    def add_member(self, pid):
        msgs = super().add_member(pid)
        self.enroll_events += 1
        if msgs > self._enroll_cap():
            self.bound_failures.append(f"enroll {pid}: {msgs} > {self._enroll_cap()}")
        return msgs

    def remove_member(self, pid):
        msgs = super().remove_member(pid)
        self.enroll_events += 1
        if msgs > self._enroll_cap():
            self.bound_failures.append(f"withdraw {pid}: {msgs} > {self._enroll_cap()}")
        return msgs

    def find(self, requester, rng):
        before = self.find_hops
        got = super().find(requester, rng)
        hops = self.find_hops - before
        self.find_events += 1
        if hops > max(1, self.forest.max_depth):
            self.bound_failures.append(
                f"find by {requester}: {hops} hops > {max(1, self.forest.max_depth)}"
            )
        return got


def _replay_money(cfg, rep):
    """Re-derive starting balances and replay every receipt; returns
    (negative-balance events, conservation ok, final balances match forest)."""
    rng = np.random.default_rng(cfg.seed)
    budgets = assign_budgets(cfg, rng)
    bal = np.zeros(cfg.n + 1, dtype=np.int64)
    bal[0] = cfg.server_budget
    bal[1:] = budgets
    neg = []
    burned = 0
    for line in rep.lines:
        r = json.loads(line)
        kind = r.get("kind")
        if kind == "adopt":
            bal[r["payer"]] -= 1
            burned += 1
        elif kind == "buy":
            bal[r["payer"]] -= r["payment"]
            bal[r["payee"]] += r["payment"]
        elif kind == "swap":
            bal[r["payer"]] -= 1
            bal[r["payee"]] += 1
        else:
            continue
        if bal[r["payer"]] < 0:
            neg.append(f"{kind} left peer {r['payer']} at {int(bal[r['payer']])}")
    conserved = int(bal.sum()) + burned == cfg.server_budget + int(budgets.sum())
    matches = bool((bal == rep.forest.balance[: cfg.n + 1]).all())
    return neg, conserved, matches


def test_criterion_07_runtime_invariants_full_scale(grid, monkeypatch, capsys):
    problems = []
    monkeypatch.setattr(simmod, "FreeSet", _CheckingFreeSet)
    real_validate = validate_forest
    audits = {"calls": 0, "violations": []}

    def counting_validate(forest, deep=False):
        out = real_validate(forest, deep)
        audits["calls"] += 1
        audits["violations"].extend(out)
        return out

    monkeypatch.setattr(simmod, "validate_forest", counting_validate)

    for name in ("HM4-1", "HT8-2"):
        cfg = PRESETS[name].with_overrides(
            neighbor_count=4 * PRESETS[name].num_substreams, seed=0
        )
        audits["calls"] = 0
        audits["violations"] = []
        _CheckingFreeSet.instances.clear()
        try:
            rep = run_scenario(cfg, "economy")
        except IncompleteRunError as exc:
            problems.append(f"{name}: run incomplete")
            rep = exc.report
        if audits["calls"] < cfg.n:
            problems.append(f"{name}: only {audits['calls']} structural audits ran")
        if audits["violations"]:
            problems.append(f"{name}: audit violations {audits['violations'][:3]}")
        if rep.forest is not None and real_validate(rep.forest, deep=True):
            problems.append(f"{name}: final deep validation failed")
        (fs,) = _CheckingFreeSet.instances
        if fs.bound_failures:
            problems.append(f"{name}: message bounds broken {fs.bound_failures[:3]}")
        if fs.enroll_events == 0:
            problems.append(f"{name}: directory never exercised")
        neg, conserved, matches = _replay_money(cfg, rep)
        if neg:
            problems.append(f"{name}: balance went negative {neg[:3]}")
        if not conserved:
            problems.append(f"{name}: money not conserved across receipts")
        if not matches:
            problems.append(f"{name}: replayed balances diverge from final state")

    for sc, want in (("HM4-1", 4), ("HM8-1", 8)):
        for seed in SEEDS5:
            free = grid.cell(sc, "economy", 4, seed)["free_slots"]
            if free != want:
                problems.append(f"{sc} seed {seed}: {free} residual slots, want {want}")
    finish(capsys, 7, "per-join structural audits clean, every balance stayed funded, "
              "message bounds held, saturated-population residual is exactly "
              "the server's slots", problems)


# --------------------------------------------------------------------- 8


def test_criterion_08_all_scenarios_complete(grid, capsys):
    problems = []
    total_retries = 0
    for sc in ALL:
        for seed in seeds_for(sc):
            cell = grid.cell(sc, "economy", 4, seed)
            total_retries += cell["retries"]
            if cell["aborted"] or cell["incomplete_peers"]:
                problems.append(f"{sc} seed {seed}: {cell['incomplete_peers']}")
    finish(capsys, 8, f"every scenario fully subscribed every peer "
              f"(single-requeue retries used: {total_retries})", problems)


# --------------------------------------------------------------------- 9


def test_criterion_09_economy_beats_comparator(grid, capsys):
    problems = []
    for sc in ALL:
        eco = grid.mean(sc, "economy", 4, SEEDS3, "avg_hops")
        base = grid.mean(sc, "baseline", 4, SEEDS3, "avg_hops")
        if not eco < base:
            problems.append(f"{sc}: economy hops {eco:.3f} !< comparator {base:.3f}")
    for sc in ("HM4-1", "HM8-1"):
        bfrac = grid.mean(sc, "baseline", 4, SEEDS3, "requesting_fraction")
        efrac = grid.mean(sc, "economy", 4, SEEDS3, "requesting_fraction")
        if bfrac < 0.25:
            problems.append(f"{sc}: comparator request fraction {bfrac:.3f} < 0.25")
        if efrac != 0.0:
            problems.append(f"{sc}: economy request fraction {efrac:.3f} != 0")
    finish(capsys, 9, "economy joins build shallower trees than the comparator in all 8 "
              "scenarios and need no lookups where the comparator asks constantly",
           problems)


# --------------------------------------------------------------------- 10


def _fresh_files(cfg, scheme, out_dir):
    try:
        rep = run_scenario(cfg, scheme)
    except IncompleteRunError as exc:
        rep = exc.report
    return emit_report(rep, out_dir)


def test_criterion_10_byte_determinism(tmp_path, capsys):
    problems = []
    cases = (
        ("HM4-1", "economy"),
        ("HT8-2", "baseline"),
    )
    for name, scheme in cases:
        cfg = PRESETS[name].with_overrides(
            neighbor_count=4 * PRESETS[name].num_substreams, seed=0
        )
        a = _fresh_files(cfg, scheme, tmp_path / f"{name}_{scheme}_a")
        b = _fresh_files(cfg, scheme, tmp_path / f"{name}_{scheme}_b")
        for pa, pb in zip(a, b):
            if pa.read_bytes() != pb.read_bytes():
                problems.append(f"{name}/{scheme}: {pa.name} differs between reruns")
    finish(capsys, 10, "independent reruns byte-identical across both schemes "
               "(receipts and all tables)", problems)
