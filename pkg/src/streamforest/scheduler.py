"""Two-phase join: spend the joiner's budget to subscribe to every tree.

Phase one targets the tree where the neighborhood holds the most misplaced
(non-dominant) children: buy the shallowest such position, swap the rest in,
and soak up neighbor free slots. Phase two fills the remaining trees with
cheapest-position buys, then free adoptions from neighbors or the free set,
and finally one collection pass of extra swaps on the target tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import FreeSetExhaustedError, ReconfigError
from .forest import SERVER, Forest
from .freeset import FreeSet
from .reconfig import ReconfigReceipt, adopt_free, buy_position, swap_child


@dataclass
class JoinContext:
    joiner: int
    neighbors: tuple[int, ...]
    pending: set[int]
    q_star: int | None = None
    backers: tuple[int, ...] = ()
    step1_seller: int | None = None
    receipts: list[ReconfigReceipt] = field(default_factory=list)
    completed: bool = False


@dataclass
class JoinReport:
    peer: int
    payments: list[int]
    freeset_requests: int
    completed: bool
    retried: bool = False

    def to_json(self) -> dict:
        return {
            "kind": "join",
            "peer": self.peer,
            "payments": list(self.payments),
            "freeset_requests": self.freeset_requests,
            "completed": self.completed,
            "retried": self.retried,
        }


def select_target(forest: Forest, neighbors, pending) -> tuple[int | None, tuple[int, ...]]:
    """Pick the unsubscribed tree backed by the most misplaced neighbor children.

    A neighbor backs tree q when it has at least one child there and q is not
    its dominant tree. Ties go to the lowest tree index; zero backing
    everywhere returns (None, ()).
    """
    best_q = None
    best: tuple[int, ...] = ()
    for q in sorted(pending):
        backers = tuple(
            j for j in sorted(neighbors)
            if j != SERVER
            and forest.children_count[q][j] >= 1
            and forest.dominant_substream(j) != q
        )
        if len(backers) > len(best):
            best_q, best = q, backers
    return best_q, best


class JoinScheduler:
    def __init__(self, forest: Forest, freeset: FreeSet, rng):
        self.forest = forest
        self.freeset = freeset
        self.rng = rng

    def join(self, joiner: int, neighbors) -> tuple[JoinReport, list[ReconfigReceipt]]:
        """Run the whole join; on free-set exhaustion the partial progress is
        kept and the error carries the report and receipts so far."""
        f = self.forest
        ctx = JoinContext(
            joiner=joiner,
            neighbors=tuple(sorted(set(neighbors) - {joiner})),
            pending={k for k in range(f.num_trees) if not f.is_subscribed(joiner, k)},
        )
        f.neighbors[joiner] = ctx.neighbors
        finds_before = self.freeset.find_requests
        try:
            ctx.q_star, ctx.backers = select_target(f, ctx.neighbors, ctx.pending)
            self._step1(ctx)
            self._step2(ctx)
            self._step3(ctx)
            if ctx.pending:
                self._step4(ctx)
            if ctx.pending:
                self._step5(ctx)
            self._step6(ctx)
            ctx.completed = True
        except FreeSetExhaustedError as exc:
            exc.report = self._report(ctx, finds_before)
            exc.receipts = list(ctx.receipts)
            raise
        return self._report(ctx, finds_before), ctx.receipts

    def _report(self, ctx: JoinContext, finds_before: int) -> JoinReport:
        payments = [r.payment for r in ctx.receipts
                    if r.payer == ctx.joiner and r.payment > 0]
        return JoinReport(
            peer=ctx.joiner,
            payments=payments,
            freeset_requests=self.freeset.find_requests - finds_before,
            completed=ctx.completed,
        )

    # ----------------------------------------------------------- phase one

    def _step1(self, ctx: JoinContext) -> None:
        """Buy the shallowest backed position in the target tree; with a
        multi-unit payment, also get adopted into the seller's dominant tree."""
        if ctx.q_star is None:
            return
        f = self.forest
        i = ctx.joiner
        q = ctx.q_star
        beta = int(f.balance[i])
        free = f.free_capacity(i)
        if beta < 1 or free < 1:
            return
        j = min(ctx.backers, key=lambda b: (int(f.depth[q][b]), b))
        # keep one unit for all but two of the missing trees
        p = max(1, min(f.price(j, q), beta - (len(ctx.pending) - 2), beta, free))
        ctx.receipts.append(buy_position(f, i, j, q, p))
        ctx.pending.discard(q)
        ctx.step1_seller = j
        if p > 1:
            dom = f.dominant_substream(j)
            if dom in ctx.pending and f.free_capacity(j) >= 1 and f.balance[j] >= 1:
                ctx.receipts.append(adopt_free(f, j, i, dom))
                ctx.pending.discard(dom)

    def _step2(self, ctx: JoinContext) -> None:
        """Collect one child from every other backer, nearest first, and take
        any free slot they offer in their dominant tree."""
        f = self.forest
        i = ctx.joiner
        q = ctx.q_star
        if q is None or not f.is_subscribed(i, q):
            return
        rest = [b for b in ctx.backers if b != ctx.step1_seller]
        for j in sorted(rest, key=lambda b: (int(f.depth[q][b]), b)):
            if f.balance[i] >= 1 and f.free_capacity(i) >= 1:
                try:
                    ctx.receipts.append(swap_child(f, i, j, q, declared_target=True))
                except ReconfigError:
                    pass
            dom = f.dominant_substream(j)
            if dom in ctx.pending and f.free_capacity(j) >= 1 and f.balance[j] >= 1:
                try:
                    ctx.receipts.append(adopt_free(f, j, i, dom))
                    ctx.pending.discard(dom)
                except ReconfigError:
                    pass

    def _step3(self, ctx: JoinContext) -> None:
        """Soak up neighbors whose dominant tree is still missing and who have
        a slot and a unit to donate; lowest id first, until none qualifies."""
        f = self.forest
        i = ctx.joiner
        while ctx.pending:
            hit = None
            for j in ctx.neighbors:
                if f.free_capacity(j) >= 1 and f.balance[j] >= 1:
                    dom = f.dominant_substream(j)
                    if dom in ctx.pending:
                        hit = (j, dom)
                        break
            if hit is None:
                return
            j, dom = hit
            ctx.receipts.append(adopt_free(f, j, i, dom))
            ctx.pending.discard(dom)

    # ----------------------------------------------------------- phase two

    def _step4(self, ctx: JoinContext) -> None:
        """Buy the cheapest position per missing tree (ties: shallower, then
        lower id); skip trees the joiner cannot afford right now."""
        f = self.forest
        i = ctx.joiner
        for q in sorted(ctx.pending):
            best_key = None
            best_j = None
            for j in ctx.neighbors:
                if j == SERVER or not f.is_subscribed(j, q):
                    continue
                if f.dominant_substream(j) == q:
                    continue
                key = (f.price(j, q), int(f.depth[q][j]), j)
                if best_key is None or key < best_key:
                    best_key, best_j = key, j
            if best_j is None:
                continue
            price = best_key[0]
            if price <= f.balance[i] and f.free_capacity(i) >= price:
                ctx.receipts.append(buy_position(f, i, best_j, q, price))
                ctx.pending.discard(q)

    def _step5(self, ctx: JoinContext) -> None:
        """Free adoptions for whatever is left: neighbors with spare slots
        first (preferring providers dominant in that tree, then shallow, then
        low id), then free-set lookups."""
        f = self.forest
        i = ctx.joiner
        for q in sorted(ctx.pending):
            cands = [
                j for j in ctx.neighbors
                if f.is_subscribed(j, q) and f.free_capacity(j) >= 1 and f.balance[j] >= 1
            ]
            if cands:
                j = min(
                    cands,
                    key=lambda b: (
                        0 if f.dominant_substream(b) == q else 1,
                        int(f.depth[q][b]),
                        b,
                    ),
                )
            else:
                j = self.freeset.find(i, self.rng)
                if j is None:
                    raise FreeSetExhaustedError(
                        f"no provider found for peer {i} tree {q}"
                    )
            ctx.receipts.append(adopt_free(f, j, i, q))
            ctx.pending.discard(q)

    def _step6(self, ctx: JoinContext) -> None:
        """One collection pass: swap extra children of the target tree in from
        the backers while the joiner still has slots and balance."""
        if ctx.pending or ctx.q_star is None or not ctx.backers:
            return
        f = self.forest
        i = ctx.joiner
        q = ctx.q_star
        if f.free_capacity(i) < 1 or f.balance[i] < 1:
            return
        for j in sorted(ctx.backers, key=lambda b: (int(f.depth[q][b]), b)):
            if f.free_capacity(i) < 1 or f.balance[i] < 1:
                return
            try:
                ctx.receipts.append(swap_child(f, i, j, q, declared_target=True))
            except ReconfigError:
                pass
