"""Multi-tree overlay state and invariant checking.

The forest keeps one shared id space (server = id 0, peers = 1..) and flat
numpy arrays per tree so whole-forest validation stays vectorized. Children
lists live in plain python lists per (tree, id); all money movement funnels
through `transfer`/`donate` so conservation can be asserted globally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ExcludedFromMetricError,
    NotFoundError,
    NotSubscribedError,
    ValidationFailedError,
)

SERVER = 0


@dataclass(frozen=True)
class PeerState:
    """Read-only snapshot of one peer, assembled on demand."""

    id: int
    budget: int
    balance: int
    neighbors: tuple[int, ...]
    parents: tuple[int, ...]          # -1 where unsubscribed
    depths: tuple[int, ...]           # -1 where unsubscribed
    children: tuple[tuple[int, ...], ...]

    @property
    def price_vector(self) -> tuple[int, ...]:
        return tuple(len(c) + 1 for c in self.children)


class Forest:
    """N trees rooted at the server, with budgets, balances and depth caches.

    Mutations go through `attach` (new subscription) and `reparent` (move a
    subtree); both keep depth caches, per-tree counters and the depth
    histogram consistent and inform the optional listener. Balance changes go
    through `transfer` (pure move) and `donate` (sink, counted so that
    sum(balance) + donations stays constant).
    """

    def __init__(self, num_trees: int, capacity: int, server_budget: int, listener=None):
        if num_trees < 1 or capacity < 1 or server_budget < 1:
            raise ValueError("num_trees, capacity and server_budget must be >= 1")
        self.num_trees = num_trees
        self.capacity = capacity
        self.listener = listener

        self.parent = np.full((num_trees, capacity), -1, dtype=np.int32)
        self.depth = np.full((num_trees, capacity), -1, dtype=np.int32)
        self.children_count = np.zeros((num_trees, capacity), dtype=np.int32)
        self.budget = np.zeros(capacity, dtype=np.int64)
        self.balance = np.zeros(capacity, dtype=np.int64)
        self.total_children = np.zeros(capacity, dtype=np.int32)
        self.sub_count = np.zeros(capacity, dtype=np.int32)
        self.present = np.zeros(capacity, dtype=bool)
        self.peer_mask = np.zeros(capacity, dtype=bool)   # present and not server
        # children[k][i] -> list of child ids of i in tree k (insertion order)
        self.children: list[list[list[int]]] = [
            [[] for _ in range(capacity)] for _ in range(num_trees)
        ]
        self.tree_subs = np.zeros(num_trees, dtype=np.int64)  # subscribed peers per tree
        self.neighbors: dict[int, tuple[int, ...]] = {}

        self.donations = 0
        self.money_baseline = 0
        self._depth_hist = np.zeros(capacity + 2, dtype=np.int64)
        self._max_depth = 0

        # the server sources every tree at depth 0 and never gains a parent
        self.present[SERVER] = True
        self.budget[SERVER] = server_budget
        self.balance[SERVER] = server_budget
        self.sub_count[SERVER] = num_trees
        self.depth[:, SERVER] = 0
        self._depth_hist[0] = num_trees
        self.money_baseline = server_budget

    # ------------------------------------------------------------------ setup

    def register_peer(self, pid: int, budget: int) -> None:
        """Add a peer id with its budget; balance starts equal to the budget."""
        if not (0 < pid < self.capacity):
            raise NotFoundError(f"peer id {pid} out of range")
        if self.present[pid]:
            raise ValueError(f"peer {pid} already registered")
        if budget < 0:
            raise ValueError("budget must be >= 0")
        self.present[pid] = True
        self.peer_mask[pid] = True
        self.budget[pid] = budget
        self.balance[pid] = budget
        self.money_baseline += budget

    # ---------------------------------------------------------------- queries

    def _check_peer(self, pid: int) -> None:
        if not (0 <= pid < self.capacity) or not self.present[pid]:
            raise NotFoundError(f"unknown peer id {pid}")

    def _check_tree(self, k: int) -> None:
        if not (0 <= k < self.num_trees):
            raise NotFoundError(f"tree index {k} out of range")

    def is_subscribed(self, pid: int, k: int) -> bool:
        return bool(self.depth[k][pid] >= 0)

    def subscribed_trees(self, pid: int) -> list[int]:
        return [k for k in range(self.num_trees) if self.depth[k][pid] >= 0]

    def price(self, pid: int, k: int) -> int:
        self._check_peer(pid)
        self._check_tree(k)
        return int(self.children_count[k][pid]) + 1

    def price_vector(self, pid: int) -> np.ndarray:
        self._check_peer(pid)
        return self.children_count[:, pid] + 1

    def dominant_substream(self, pid: int) -> int:
        """Tree with the most children of pid; ties go to the lowest index."""
        self._check_peer(pid)
        return int(np.argmax(self.children_count[:, pid]))

    def is_saturated(self, pid: int) -> bool:
        """All of pid's budget spent as children of a single tree."""
        self._check_peer(pid)
        m = int(self.budget[pid])
        if m < 1:
            return False
        col = self.children_count[:, pid]
        return int(self.total_children[pid]) == m and int(col.max()) == m

    def free_capacity(self, pid: int) -> int:
        self._check_peer(pid)
        return int(self.budget[pid]) - int(self.total_children[pid])

    def hop_count(self, pid: int, k: int) -> int:
        self._check_peer(pid)
        self._check_tree(k)
        d = int(self.depth[k][pid])
        if d < 0:
            raise NotSubscribedError(f"peer {pid} not subscribed to tree {k}")
        return d

    def saturation_fraction(self, pid: int) -> float:
        self._check_peer(pid)
        m = int(self.budget[pid])
        if m < 1:
            raise ExcludedFromMetricError(f"peer {pid} has zero budget")
        dom = self.dominant_substream(pid)
        return int(self.children_count[dom][pid]) / m

    def children_of(self, pid: int, k: int) -> list[int]:
        return list(self.children[k][pid])

    def parent_of(self, pid: int, k: int) -> int:
        return int(self.parent[k][pid])

    @property
    def max_depth(self) -> int:
        return self._max_depth

    def is_strict_ancestor(self, anc: int, pid: int, k: int) -> bool:
        """True iff anc lies strictly above pid on pid's path to the root in k."""
        da = int(self.depth[k][anc])
        dp = int(self.depth[k][pid])
        if da < 0 or dp <= da:
            return False
        v = pid
        par = self.parent[k]
        for _ in range(dp - da):
            v = int(par[v])
        return v == anc

    def free_slots_total(self) -> int:
        ids = self.present
        return int(self.budget[ids].sum()) - int(self.total_children[ids].sum())

    # -------------------------------------------------------------- mutations

    def attach(self, child: int, parent: int, k: int) -> None:
        """Create the edge parent -> child in tree k (a new subscription).

        Raw bookkeeping only — callers enforce capacity/balance preconditions.
        """
        assert self.present[child] and self.present[parent]
        assert self.depth[k][child] < 0, "child already subscribed"
        assert self.depth[k][parent] >= 0, "parent not subscribed"
        assert child != parent
        d = int(self.depth[k][parent]) + 1
        self.parent[k][child] = parent
        self.depth[k][child] = d
        self.children[k][parent].append(child)
        self.children_count[k][parent] += 1
        self.total_children[parent] += 1
        self.sub_count[child] += 1
        self.tree_subs[k] += 1
        self._depth_hist[d] += 1
        if d > self._max_depth:
            self._max_depth = d
        if self.listener is not None:
            self.listener.on_attach(child, parent, k)

    def reparent(self, child: int, k: int, new_parent: int) -> None:
        """Move child (with its subtree) under new_parent in tree k."""
        assert self.depth[k][child] >= 0, "child not subscribed"
        assert self.depth[k][new_parent] >= 0, "new parent not subscribed"
        assert new_parent != child
        old_parent = int(self.parent[k][child])
        assert old_parent >= 0, "cannot reparent a root"
        self.children[k][old_parent].remove(child)
        self.children_count[k][old_parent] -= 1
        self.total_children[old_parent] -= 1
        self.children[k][new_parent].append(child)
        self.children_count[k][new_parent] += 1
        self.total_children[new_parent] += 1
        self.parent[k][child] = new_parent
        delta = int(self.depth[k][new_parent]) + 1 - int(self.depth[k][child])
        if delta != 0:
            self._shift_subtree_depth(child, k, delta)
        if self.listener is not None:
            self.listener.on_reparent(child, k, old_parent, new_parent)

    def _shift_subtree_depth(self, root: int, k: int, delta: int) -> None:
        kids = self.children[k]
        depth = self.depth[k]
        hist = self._depth_hist
        stack = [root]
        while stack:
            v = stack.pop()
            d0 = int(depth[v])
            d1 = d0 + delta
            hist[d0] -= 1
            hist[d1] += 1
            depth[v] = d1
            if d1 > self._max_depth:
                self._max_depth = d1
            stack.extend(kids[v])
        while self._max_depth > 0 and hist[self._max_depth] == 0:
            self._max_depth -= 1

    def transfer(self, payer: int, payee: int, amount: int) -> None:
        assert amount >= 1
        assert self.balance[payer] >= amount, "transfer would drive balance negative"
        self.balance[payer] -= amount
        self.balance[payee] += amount

    def donate(self, provider: int) -> None:
        """Burn one balance unit at provider (the cost of donating a slot)."""
        assert self.balance[provider] >= 1, "donation would drive balance negative"
        self.balance[provider] -= 1
        self.donations += 1

    def notify_touched(self, ids) -> None:
        if self.listener is not None:
            self.listener.on_touched(sorted(set(ids)))

    def rebaseline_money(self) -> None:
        """Reset the conservation baseline after hand-editing balances."""
        self.money_baseline = int(self.balance[self.present].sum()) + self.donations

    # --------------------------------------------------------------- exports

    def snapshot(self) -> dict:
        """JSON-friendly map: peer id -> list of per-tree parents (-1 = none)."""
        out = {}
        for pid in np.flatnonzero(self.present):
            out[str(int(pid))] = [int(self.parent[k][pid]) for k in range(self.num_trees)]
        return out

    def peer_state(self, pid: int) -> PeerState:
        self._check_peer(pid)
        return PeerState(
            id=pid,
            budget=int(self.budget[pid]),
            balance=int(self.balance[pid]),
            neighbors=self.neighbors.get(pid, ()),
            parents=tuple(int(self.parent[k][pid]) for k in range(self.num_trees)),
            depths=tuple(int(self.depth[k][pid]) for k in range(self.num_trees)),
            children=tuple(tuple(self.children[k][pid]) for k in range(self.num_trees)),
        )


def validate_forest(forest: Forest, deep: bool = False) -> list[str]:
    """Check every structural and monetary invariant; return violations.

    The fast mode is fully vectorized: per-edge depth consistency plus
    parent-subscribed plus a unique parentless root per tree imply acyclicity
    and connectivity, so no traversal is needed. `deep` additionally
    cross-checks the children lists against the counters.
    """
    v: list[str] = []
    present = forest.present
    peer_mask = forest.peer_mask
    n_trees = forest.num_trees

    if (forest.balance[present] < 0).any():
        bad = int(np.flatnonzero(present & (forest.balance < 0))[0])
        v.append(f"negative balance at peer {bad}")
    over = present & (forest.total_children > forest.budget)
    if over.any():
        bad = int(np.flatnonzero(over)[0])
        v.append(f"capacity exceeded at peer {bad}")
    if (forest.children_count[:, present].sum(axis=0) != forest.total_children[present]).any():
        v.append("total_children out of sync with per-tree counts")

    subs = (forest.depth >= 0).sum(axis=0, dtype=np.int32)
    bad_subs = peer_mask & (subs != forest.sub_count)
    if bad_subs.any():
        bad = int(np.flatnonzero(bad_subs)[0])
        v.append(f"sub_count out of sync at peer {bad}")

    total_money = int(forest.balance[present].sum()) + forest.donations
    if total_money != forest.money_baseline:
        v.append(
            f"money not conserved: balances+donations={total_money} "
            f"baseline={forest.money_baseline}"
        )

    # all-trees edge checks in one shot (this runs after every join, so the
    # hot path stays free of per-tree python loops)
    par = forest.parent
    dep = forest.depth
    if (par[:, SERVER] != -1).any() or (dep[:, SERVER] != 0).any():
        bad = int(np.flatnonzero((par[:, SERVER] != -1) | (dep[:, SERVER] != 0))[0])
        v.append(f"server corrupted in tree {bad}")
    if (dep[:, ~present] >= 0).any():
        v.append("unregistered id subscribed")
    subm = (dep >= 0) & peer_mask[None, :]
    rootless = subm & (par < 0)
    if rootless.any():
        k, pid = (int(x) for x in np.argwhere(rootless)[0])
        v.append(f"tree {k}: subscribed peer {pid} has no parent")
    linked = subm & (par >= 0)
    dpar = np.take_along_axis(dep, np.where(linked, par, SERVER), axis=1)
    orphaned = linked & (dpar < 0)
    if orphaned.any():
        k, pid = (int(x) for x in np.argwhere(orphaned)[0])
        v.append(f"tree {k}: parent of {pid} not subscribed")
    bad_depth = linked & ~orphaned & (dep != dpar + 1)
    if bad_depth.any():
        k, pid = (int(x) for x in np.argwhere(bad_depth)[0])
        v.append(f"tree {k}: depth cache wrong at peer {pid}")
    edges = forest.children_count[:, present].sum(axis=1)
    subs_per_tree = subm.sum(axis=1)
    if (edges != subs_per_tree).any():
        bad = int(np.flatnonzero(edges != subs_per_tree)[0])
        v.append(f"tree {bad}: edge count != subscription count")
    if (forest.tree_subs != subs_per_tree).any():
        bad = int(np.flatnonzero(forest.tree_subs != subs_per_tree)[0])
        v.append(f"tree {bad}: subscriber counter out of sync")

    if deep:
        for k in range(n_trees):
            for pid in np.flatnonzero(present):
                kids = forest.children[k][pid]
                if len(kids) != int(forest.children_count[k][pid]):
                    v.append(f"tree {k}: children list length mismatch at {int(pid)}")
                if len(set(kids)) != len(kids):
                    v.append(f"tree {k}: duplicate child at {int(pid)}")
                for c in kids:
                    if int(forest.parent[k][c]) != pid:
                        v.append(f"tree {k}: child {c} does not point back to {int(pid)}")
        live = forest.depth[forest.depth >= 0]
        hist = np.bincount(live, minlength=forest._depth_hist.size)
        if (hist != forest._depth_hist[: hist.size]).any():
            v.append("depth histogram out of sync")
        real_max = int(live.max()) if live.size else 0
        if real_max != forest._max_depth:
            v.append(f"max depth cursor {forest._max_depth} != real {real_max}")
    return v


def assert_valid(forest: Forest, deep: bool = False) -> None:
    violations = validate_forest(forest, deep=deep)
    if violations:
        raise ValidationFailedError(violations)
