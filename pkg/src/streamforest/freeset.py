"""Distributed spare-capacity directory maintained over the tree paths.

Membership: fully subscribed, at least one free slot, at least one balance
unit (the server qualifies whenever it has a slot and a unit). Every ancestor
of a member, in every tree the member is subscribed to, knows about it; the
knowledge is tracked as per-node reference counts so that reparenting a whole
subtree costs one walk per path instead of one walk per member.

Messages are counted, never sent: enrolling or withdrawing costs one message
per path edge, a subtree move re-announces each member-path along the old and
new parent paths, and a lookup walks up one randomly chosen parent chain.
"""

from __future__ import annotations

import numpy as np

from .errors import AlreadyMemberError, NotMemberError
from .forest import SERVER, Forest


class FreeSet:
    def __init__(self, forest: Forest):
        self.forest = forest
        forest.listener = self
        self.cnt = np.zeros((forest.num_trees, forest.capacity), dtype=np.int32)
        self.members: set[int] = set()
        self.join_messages = 0
        self.leave_messages = 0
        self.update_messages = 0
        self.find_requests = 0
        self.find_hops = 0

    # ------------------------------------------------------------- membership

    def is_member(self, pid: int) -> bool:
        return pid in self.members

    def eligible(self, pid: int) -> bool:
        f = self.forest
        if f.balance[pid] < 1 or f.free_capacity(pid) < 1:
            return False
        return pid == SERVER or int(f.sub_count[pid]) == f.num_trees

    def refresh(self, pid: int) -> None:
        el = self.eligible(pid)
        if el and pid not in self.members:
            self.add_member(pid)
        elif not el and pid in self.members:
            self.remove_member(pid)

    def sync_all(self) -> None:
        for pid in np.flatnonzero(self.forest.present):
            self.refresh(int(pid))

    def add_member(self, pid: int) -> int:
        """Announce pid along all its parent paths; returns messages sent."""
        if pid in self.members:
            raise AlreadyMemberError(f"peer {pid} already in the free set")
        self.members.add(pid)
        msgs = self._announce(pid, +1)
        self.join_messages += msgs
        assert msgs <= self.forest.num_trees * max(1, self.forest.max_depth)
        return msgs

    def remove_member(self, pid: int) -> int:
        if pid not in self.members:
            raise NotMemberError(f"peer {pid} not in the free set")
        self.members.discard(pid)
        msgs = self._announce(pid, -1)
        self.leave_messages += msgs
        assert msgs <= self.forest.num_trees * max(1, self.forest.max_depth)
        return msgs

    def _announce(self, pid: int, delta: int) -> int:
        f = self.forest
        msgs = 0
        for k in range(f.num_trees):
            if f.depth[k][pid] >= 0 and pid != SERVER:
                msgs += self._walk(int(f.parent[k][pid]), k, delta)
        return msgs

    def _walk(self, start: int, k: int, delta: int) -> int:
        """Apply delta along start's chain up to the root; returns nodes seen."""
        par = self.forest.parent[k]
        cnt = self.cnt[k]
        v = start
        n = 0
        while v >= 0:
            cnt[v] += delta
            n += 1
            v = int(par[v])
        return n

    # --------------------------------------------------------- forest hooks

    def on_attach(self, child: int, parent: int, k: int) -> None:
        # a member gaining a subscription cannot happen mid-run (members are
        # fully subscribed already); handled anyway so raw edits stay safe
        if child in self.members:
            self.update_messages += self._walk(parent, k, +1)

    def on_reparent(self, child: int, k: int, old_parent: int, new_parent: int) -> None:
        mc = int(self.cnt[k][child]) + (1 if child in self.members else 0)
        if mc == 0:
            return
        edges = self._walk(old_parent, k, -mc) + self._walk(new_parent, k, +mc)
        self.update_messages += mc * edges

    def on_touched(self, ids) -> None:
        for pid in ids:
            self.refresh(pid)

    # ------------------------------------------------------------------ find

    def find(self, requester: int, rng) -> int | None:
        """Walk up one random parent chain to the first node that knows a member.

        Returns the lowest-id member that node knows, or None when the set is
        empty. Counts one request and at most max-depth hops.
        """
        self.find_requests += 1
        f = self.forest
        trees = f.subscribed_trees(requester) if requester != SERVER else []
        if not trees:
            # nothing to walk: ask the server directly (one hop)
            v = SERVER
            hops = 1
        else:
            k = trees[int(rng.integers(0, len(trees)))]
            v = int(f.parent[k][requester])
            hops = 1
            while v != SERVER and not self._knows(v):
                v = int(f.parent[k][v])
                hops += 1
        self.find_hops += hops
        assert hops <= max(1, f.max_depth)
        if not self.members:
            return None
        found = self._lowest_known(v)
        assert found is not None, "walk stopped at a node that knows nobody"
        return found

    def _knows(self, v: int) -> bool:
        return v in self.members or bool(self.cnt[:, v].any())

    def _lowest_known(self, v: int) -> int | None:
        f = self.forest
        for m in sorted(self.members):
            if m == v:
                return m
            for k in range(f.num_trees):
                if f.is_strict_ancestor(v, m, k):
                    return m
        return None

    # ----------------------------------------------------------------- audit

    def audit(self) -> list[str]:
        """Recompute knowledge counts and membership from scratch; returns diffs."""
        out: list[str] = []
        f = self.forest
        fresh = np.zeros_like(self.cnt)
        for m in self.members:
            for k in range(f.num_trees):
                if f.depth[k][m] >= 0 and m != SERVER:
                    v = int(f.parent[k][m])
                    while v >= 0:
                        fresh[k][v] += 1
                        v = int(f.parent[k][v])
        if (fresh != self.cnt).any():
            k, v = np.argwhere(fresh != self.cnt)[0]
            out.append(
                f"knowledge count mismatch at tree {int(k)} node {int(v)}: "
                f"have {int(self.cnt[k][v])}, recomputed {int(fresh[k][v])}"
            )
        truth = {int(p) for p in np.flatnonzero(f.present) if self.eligible(int(p))}
        if truth != self.members:
            out.append(f"membership drift: extra={self.members - truth} missing={truth - self.members}")
        return out
