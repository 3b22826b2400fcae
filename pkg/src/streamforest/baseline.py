"""Prefix-steered comparator scheme: random digit ids, utility-based child
eviction with push-down cascades, and a spare-capacity group as the fallback
parent source.

No money moves in this scheme; budgets only bound the child count. Parent
candidates come from the same tracker sample the economy scheme uses, so both
schemes work from an identical information budget.
"""

from __future__ import annotations

import numpy as np

from .errors import SpareGroupExhaustedError
from .forest import SERVER, Forest
from .scheduler import JoinReport

ID_DIGITS = 8


class BaselineEngine:
    """Per-run state: the id table and spare-group request accounting.

    Tree k's group id is the constant digit string k...k; a peer's affinity
    for tree k is the length of its id's leading run of k digits. Normal
    attaches only go under the server or under a parent whose first digit
    matches the tree, so a peer turns interior in a foreign tree only when a
    cascade or the spare group parks a child on it (`tainted` records every
    such host).
    """

    def __init__(self, forest: Forest, rng: np.random.Generator):
        self.forest = forest
        n_trees = forest.num_trees
        self.digits = rng.integers(
            0, n_trees, size=(forest.capacity, ID_DIGITS), dtype=np.int8
        )
        match = self.digits[:, None, :] == np.arange(n_trees, dtype=np.int8)[None, :, None]
        # affinity[p][k] = length of p's leading digit run equal to k
        self.affinity = np.cumprod(match, axis=2).sum(axis=2).astype(np.int16)
        self.affinity[SERVER, :] = -1     # the server donates slots, last resort
        self.spare_requests = 0
        self.requests_by_peer = np.zeros(forest.capacity, dtype=np.int64)
        self.evictions = 0
        self.cascades = 0
        self.tainted: set[int] = set()

    # ------------------------------------------------------------------- join

    def join(self, joiner: int, sample) -> tuple[JoinReport, list]:
        """Subscribe joiner to every tree it is still missing.

        Raises SpareGroupExhaustedError (carrying a partial report) when some
        tree has no reachable slot; subscriptions already made are kept.
        """
        f = self.forest
        neighbors = sorted(set(sample) - {joiner})
        f.neighbors[joiner] = tuple(neighbors)
        before = int(self.requests_by_peer[joiner])
        try:
            for k in range(f.num_trees):
                if not f.is_subscribed(joiner, k):
                    self._join_tree(joiner, k, neighbors)
        except SpareGroupExhaustedError as exc:
            exc.report = JoinReport(
                peer=joiner,
                payments=[],
                freeset_requests=int(self.requests_by_peer[joiner]) - before,
                completed=False,
            )
            exc.receipts = []
            raise
        report = JoinReport(
            peer=joiner,
            payments=[],
            freeset_requests=int(self.requests_by_peer[joiner]) - before,
            completed=True,
        )
        return report, []

    def _join_tree(self, joiner: int, k: int, neighbors: list[int]) -> None:
        f = self.forest
        cands = [
            c
            for c in neighbors
            if c != SERVER and f.is_subscribed(c, k) and self.digits[c][0] == k
        ]
        if cands:
            open_cands = [c for c in cands if f.free_capacity(c) > 0]
            if open_cands:
                best = min(
                    open_cands,
                    key=lambda c: (-int(self.affinity[c][k]), int(f.depth[k][c]), c),
                )
                f.attach(joiner, best, k)
                return
            # all full: evict at the deepest best-prefix candidate, which
            # displaces the smallest subtree
            best = min(
                cands,
                key=lambda c: (-int(self.affinity[c][k]), -int(f.depth[k][c]), c),
            )
            if self._reject_child(best, joiner, k):
                return
        elif SERVER in neighbors and f.free_capacity(SERVER) > 0:
            f.attach(joiner, SERVER, k)
            return
        self._spare_attach(joiner, k)

    # -------------------------------------------------------------- primitives

    def _reject_child(self, parent: int, joiner: int, k: int) -> bool:
        """Make room for joiner under the full parent by evicting downward.

        Each stage evicts the least tree-affine child; the orphan lands on a
        free former sibling when one exists, otherwise it pushes into the
        most-affine sibling one level down and the eviction repeats there. An
        orphan with no sibling to push lands via the spare group. The plan is
        computed first and only applied once every orphan has a home; if the
        last one has none, nothing moves and the caller falls back to the
        spare group itself.
        """
        f = self.forest
        plan: list[tuple[int, int]] = []   # (full parent, evicted child)
        seat = parent                       # where the current orphan must fit
        last_landing = None                 # free slot ending the cascade
        while True:
            kids = f.children_of(seat, k)
            if not kids:
                break
            victim = min(kids, key=lambda c: (int(self.affinity[c][k]), c))
            plan.append((seat, victim))
            siblings = [c for c in kids if c != victim]
            open_sibs = [c for c in siblings if f.free_capacity(c) > 0]
            if open_sibs:
                last_landing = min(
                    open_sibs, key=lambda c: (-int(self.affinity[c][k]), c)
                )
                break
            full_sibs = [c for c in siblings if f.children_count[k][c] > 0]
            if not full_sibs:
                break
            seat = min(full_sibs, key=lambda c: (-int(self.affinity[c][k]), c))

        if not plan:
            return False    # parent is full solely through other trees
        assert len(plan) <= max(1, f.max_depth) + 1, "cascade deeper than the tree"

        if last_landing is None:
            final = plan[-1][1]
            last_landing = self._spare_query(final, k, moving_root=final)
            if last_landing is None:
                # Nowhere to push the orphan: seat the joiner between the full
                # parent and its least-affine child instead, provided the
                # joiner can host that child itself.
                if f.free_capacity(joiner) < 1:
                    return False
                victim = plan[0][1]
                f.attach(joiner, parent, k)
                f.reparent(victim, k, joiner)
                self._host(joiner, k)
                self.evictions += 1
                self.cascades += 1
                return True

        # victim i pushes into the next stage's seat; the last one takes the
        # free slot. Apply bottom-up so every landing has room when used.
        landings = [seat for seat, _ in plan[1:]] + [last_landing]
        for (_, victim), landing in reversed(list(zip(plan, landings))):
            f.reparent(victim, k, landing)
            self._host(landing, k)
            self.evictions += 1
        f.attach(joiner, parent, k)
        self.cascades += 1
        return True

    def _spare_attach(self, joiner: int, k: int) -> None:
        spare = self._spare_query(joiner, k)
        if spare is None:
            # No member receives tree k with a slot open; push down at the
            # tree root so the joiner's own capacity enters the tree.
            if self._reject_child(SERVER, joiner, k):
                return
            raise SpareGroupExhaustedError(
                f"no spare-group parent for peer {joiner} in tree {k}"
            )
        self.forest.attach(joiner, spare, k)
        self._host(spare, k)

    def _spare_query(self, requester: int, k: int, moving_root: int | None = None):
        """Best spare-group member able to parent requester in tree k.

        Members are peers with a free slot already receiving tree k, ranked by
        affinity for the tree (the server ranks last) with low ids breaking
        ties. Every call counts as one request by the requester, found or not.
        """
        f = self.forest
        self.spare_requests += 1
        self.requests_by_peer[requester] += 1
        pool = f.present & (f.sub_count > 0) & (f.budget > f.total_children)
        pool &= f.depth[k] >= 0
        if requester < pool.size:
            pool[requester] = False
        ids = np.flatnonzero(pool)
        if ids.size == 0:
            return None
        order = np.lexsort((ids, -self.affinity[ids, k]))
        for idx in order:
            cand = int(ids[idx])
            if moving_root is not None and (
                cand == moving_root or f.is_strict_ancestor(moving_root, cand, k)
            ):
                continue
            return cand
        return None

    def _host(self, parent: int, k: int) -> None:
        """Record a parent that now uploads tree k outside its own prefix."""
        if parent != SERVER and self.digits[parent][0] != k:
            self.tainted.add(parent)

    # ---------------------------------------------------------------- queries

    def requesting_peer_count(self) -> int:
        """Peers (server excluded) that issued at least one spare request."""
        counts = self.requests_by_peer[1:]
        return int((counts > 0).sum())

    def clean_interior_violations(self) -> list[str]:
        """Check that cascade/spare-untouched peers upload only in their own tree."""
        f = self.forest
        out = []
        for pid in np.flatnonzero(f.peer_mask):
            pid = int(pid)
            if pid in self.tainted:
                continue
            own = int(self.digits[pid][0])
            for k in range(f.num_trees):
                if k != own and f.children_count[k][pid] > 0:
                    out.append(f"peer {pid} (tree {own}) interior in tree {k}")
        return out
