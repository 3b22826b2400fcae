"""Atomic tree-reconfiguration primitives: adopt, buy, swap.

Each primitive checks every precondition before touching the forest, so a
raised error leaves the state bit-identical. Each returns a receipt suitable
for JSON logging and notifies the forest listener about the touched peers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    AlreadySubscribedError,
    InsufficientBalanceError,
    InsufficientSlotsError,
    InvalidReconfigError,
    NoChildToGiveError,
    NoFreeCapacityError,
    NotSubscribedError,
    PriceExceededError,
    ProviderBrokeError,
    SellerSaturatedError,
    TreeIsGiversDominantError,
)
from .forest import SERVER, Forest


@dataclass(frozen=True)
class ReconfigReceipt:
    kind: str                               # "adopt" | "buy" | "swap"
    payer: int
    payee: int
    payment: int
    tree: int
    transferred_children: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "payer": self.payer,
            "payee": self.payee,
            "payment": self.payment,
            "tree": self.tree,
            "transferred_children": list(self.transferred_children),
        }


def adopt_free(forest: Forest, provider: int, adoptee: int, k: int) -> ReconfigReceipt:
    """Provider donates a free slot: adoptee subscribes to k at no cost to itself.

    The donated unit is burned from the provider's balance, not transferred.
    """
    forest._check_peer(provider)
    forest._check_peer(adoptee)
    forest._check_tree(k)
    if provider == adoptee:
        raise InvalidReconfigError("peer cannot adopt itself")
    if not forest.is_subscribed(provider, k):
        raise NotSubscribedError(f"provider {provider} not subscribed to tree {k}")
    if forest.is_subscribed(adoptee, k):
        raise AlreadySubscribedError(f"adoptee {adoptee} already subscribed to tree {k}")
    if forest.free_capacity(provider) < 1:
        raise NoFreeCapacityError(f"provider {provider} has no free slot")
    if forest.balance[provider] < 1:
        raise ProviderBrokeError(f"provider {provider} has no balance")

    forest.attach(adoptee, provider, k)
    forest.donate(provider)
    forest.notify_touched((provider, adoptee))
    return ReconfigReceipt("adopt", provider, adoptee, 0, k, ())


def buy_position(forest: Forest, buyer: int, seller: int, k: int, payment: int) -> ReconfigReceipt:
    """Buyer pays to take over the seller's position in tree k.

    The buyer inherits the seller's parent and depth; the seller plus the
    payment-1 lowest-id children of the seller in k become the buyer's
    children there. The rest of the seller's subtree stays put (one level
    deeper through the seller).
    """
    forest._check_peer(buyer)
    forest._check_peer(seller)
    forest._check_tree(k)
    if buyer == seller:
        raise InvalidReconfigError("buyer and seller must differ")
    if SERVER in (buyer, seller):
        raise InvalidReconfigError("the server neither buys nor sells positions")
    if not forest.is_subscribed(seller, k):
        raise NotSubscribedError(f"seller {seller} not subscribed to tree {k}")
    if forest.is_subscribed(buyer, k):
        raise AlreadySubscribedError(f"buyer {buyer} already subscribed to tree {k}")
    if forest.is_saturated(seller) and forest.dominant_substream(seller) == k:
        raise SellerSaturatedError(f"seller {seller} is saturated on tree {k}")
    price = forest.price(seller, k)
    if not (1 <= payment <= price):
        raise PriceExceededError(f"payment {payment} outside [1, {price}]")
    if forest.balance[buyer] < payment:
        raise InsufficientBalanceError(f"buyer {buyer} cannot afford {payment}")
    if forest.free_capacity(buyer) < payment:
        raise InsufficientSlotsError(f"buyer {buyer} lacks {payment} free slots")

    old_parent = forest.parent_of(seller, k)
    transferred = tuple(sorted(forest.children[k][seller])[: payment - 1])
    forest.attach(buyer, old_parent, k)
    for child in transferred:
        forest.reparent(child, k, buyer)
    forest.reparent(seller, k, buyer)
    forest.transfer(buyer, seller, payment)
    forest.notify_touched((buyer, seller))
    return ReconfigReceipt("buy", buyer, seller, payment, k, transferred)


def swap_child(
    forest: Forest,
    taker: int,
    giver: int,
    k: int,
    declared_target: bool = False,
) -> ReconfigReceipt:
    """Taker pays one unit to take over the giver's lowest-id child in tree k.

    Tree k must be the taker's dominant tree (or its declared target during a
    join) and must not be the giver's dominant tree. Children that sit on the
    taker's own ancestor path are skipped to keep the tree acyclic.
    """
    forest._check_peer(taker)
    forest._check_peer(giver)
    forest._check_tree(k)
    if taker == giver:
        raise InvalidReconfigError("taker and giver must differ")
    if SERVER in (taker, giver):
        raise InvalidReconfigError("the server never swaps children")
    if not forest.is_subscribed(taker, k):
        raise NotSubscribedError(f"taker {taker} not subscribed to tree {k}")
    if not forest.is_subscribed(giver, k):
        raise NotSubscribedError(f"giver {giver} not subscribed to tree {k}")
    if not declared_target and forest.dominant_substream(taker) != k:
        raise InvalidReconfigError(f"tree {k} is not taker {taker}'s target")
    if forest.dominant_substream(giver) == k:
        raise TreeIsGiversDominantError(f"tree {k} is giver {giver}'s dominant tree")
    if forest.free_capacity(taker) < 1:
        raise NoFreeCapacityError(f"taker {taker} has no free slot")
    if forest.balance[taker] < 1:
        raise InsufficientBalanceError(f"taker {taker} has no balance")
    child = None
    for c in sorted(forest.children[k][giver]):
        if c != taker and not forest.is_strict_ancestor(c, taker, k):
            child = c
            break
    if child is None:
        raise NoChildToGiveError(f"giver {giver} has no transferable child in tree {k}")

    forest.reparent(child, k, taker)
    forest.transfer(taker, giver, 1)
    forest.notify_touched((taker, giver))
    return ReconfigReceipt("swap", taker, giver, 1, k, (child,))
