"""The three paid reconfiguration moves. Each test pins the exact mutation
(who moves where, who pays whom) and the guard that rejects the bad call;
the property test then drives random valid sequences and checks the global
laws: structure valid, money conserved, and every free slot funded
(balance >= free capacity at all times)."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamforest.errors import (
    AlreadySubscribedError,
    InsufficientBalanceError,
    InsufficientSlotsError,
    InvalidReconfigError,
    NoChildToGiveError,
    NoFreeCapacityError,
    PriceExceededError,
    ProviderBrokeError,
    SellerSaturatedError,
    TreeIsGiversDominantError,
)
from streamforest.forest import SERVER, Forest, assert_valid, validate_forest
from streamforest.reconfig import adopt_free, buy_position, swap_child


def forest_with_chain(num_trees=2, peers=8, budget=4) -> Forest:
    f = Forest(num_trees, peers + 1, 4)
    for pid in range(1, peers + 1):
        f.register_peer(pid, budget)
    return f


class TestAdopt:
    def test_adopt_attaches_and_burns_one(self):
        f = forest_with_chain()
        f.attach(1, SERVER, 0)
        r = adopt_free(f, 1, 2, 0)
        assert f.parent_of(2, 0) == 1
        assert f.balance[1] == 3 and f.donations == 1
        assert (r.kind, r.payer, r.payee, r.payment) == ("adopt", 1, 2, 0)
        assert validate_forest(f, deep=True) == []

    def test_adopt_guards(self):
        f = forest_with_chain()
        f.attach(1, SERVER, 0)
        with pytest.raises(InvalidReconfigError):
            adopt_free(f, 1, 1, 0)
        f.balance[1] = 0
        with pytest.raises(ProviderBrokeError):
            adopt_free(f, 1, 2, 0)
        f.balance[1] = 4
        adopt_free(f, 1, 2, 0)
        with pytest.raises(AlreadySubscribedError):
            adopt_free(f, 1, 2, 0)
        for c in (3, 4, 5):
            f.attach(c, 1, 0)
        with pytest.raises(NoFreeCapacityError):
            adopt_free(f, 1, 6, 0)


class TestBuy:
    def build(self):
        # tree 0: S -> 1 -> {2,3,4}; buyer 5 arrives
        f = forest_with_chain()
        f.attach(1, SERVER, 0)
        for c in (2, 3, 4):
            f.attach(c, 1, 0)
        return f

    def test_full_price_takeover(self):
        f = self.build()
        r = buy_position(f, 5, 1, 0, 4)
        assert f.parent_of(5, 0) == SERVER
        assert f.depth[0][5] == 1
        assert sorted(f.children_of(5, 0)) == [1, 2, 3, 4]
        assert f.children_of(1, 0) == []
        assert f.depth[0][1] == 2
        assert f.balance[5] == 0 and f.balance[1] == 8
        assert r.transferred_children == (2, 3, 4)
        assert validate_forest(f, deep=True) == []

    def test_partial_payment_takes_lowest_id_children(self):
        f = self.build()
        buy_position(f, 5, 1, 0, 2)
        assert sorted(f.children_of(5, 0)) == [1, 2]
        assert sorted(f.children_of(1, 0)) == [3, 4]
        assert f.depth[0][3] == 3  # stayed under the seller, one level deeper
        assert validate_forest(f, deep=True) == []

    def test_buy_guards(self):
        f = self.build()
        with pytest.raises(PriceExceededError):
            buy_position(f, 5, 1, 0, 5)
        with pytest.raises(PriceExceededError):
            buy_position(f, 5, 1, 0, 0)
        with pytest.raises(InvalidReconfigError):
            buy_position(f, 5, 5, 0, 1)
        with pytest.raises(InvalidReconfigError):
            buy_position(f, SERVER, 1, 0, 1)
        f.balance[5] = 1
        with pytest.raises(InsufficientBalanceError):
            buy_position(f, 5, 1, 0, 2)
        f.balance[5] = 4
        f.attach(5, SERVER, 1)
        for c in (6, 7, 8):
            f.attach(c, 5, 1)
        with pytest.raises(InsufficientSlotsError):
            buy_position(f, 5, 1, 0, 2)  # one slot left, needs two
        buy_position(f, 5, 1, 0, 1)
        with pytest.raises(AlreadySubscribedError):
            buy_position(f, 5, 1, 0, 1)

    def test_saturated_seller_keeps_dominant_position(self):
        f = forest_with_chain(budget=3)
        f.attach(1, SERVER, 0)
        for c in (2, 3, 4):
            f.attach(c, 1, 0)  # 1 is saturated: all three children in tree 0
        with pytest.raises(SellerSaturatedError):
            buy_position(f, 5, 1, 0, 1)
        # its position in the other tree is still for sale
        f.attach(1, SERVER, 1)
        buy_position(f, 5, 1, 1, 1)
        assert f.parent_of(1, 1) == 5


class TestSwap:
    def build(self):
        # tree 0: S -> 1 -> {2,3}; tree 1: S -> 1 -> {2,3,4} so tree 1 dominates
        f = forest_with_chain(num_trees=2, budget=5)
        f.attach(1, SERVER, 0)
        f.attach(1, SERVER, 1)
        for c in (2, 3):
            f.attach(c, 1, 0)
        for c in (2, 3, 4):
            f.attach(c, 1, 1)
        return f

    def test_swap_moves_lowest_id_child_and_pays_one(self):
        f = self.build()
        f.attach(5, SERVER, 0)
        f.attach(5, 1, 1)
        for c in (6, 7):
            f.attach(c, 5, 0)  # tree 0 dominates peer 5
        r = swap_child(f, 5, 1, 0)
        assert f.parent_of(2, 0) == 5
        assert f.balance[5] == 4 and f.balance[1] == 6
        assert (r.kind, r.payment, r.transferred_children) == ("swap", 1, (2,))
        assert validate_forest(f, deep=True) == []

    def test_swap_guards(self):
        f = self.build()
        f.attach(5, SERVER, 0)
        f.attach(5, 1, 1)
        for c in (6, 7):
            f.attach(c, 5, 0)
        with pytest.raises(TreeIsGiversDominantError):
            swap_child(f, 5, 1, 1, declared_target=True)
        with pytest.raises(InvalidReconfigError):
            swap_child(f, 5, 1, 1)  # not the taker's dominant tree either
        f2 = self.build()
        f2.attach(5, SERVER, 0)
        f2.attach(5, 1, 1)
        f2.attach(6, 5, 1)  # peer 5 now dominates tree 1
        with pytest.raises(InvalidReconfigError):
            swap_child(f2, 5, 1, 0)  # tree 0 is not 5's dominant, not declared
        swap_child(f2, 5, 1, 0, declared_target=True)

    def test_swap_skips_ancestor_children(self):
        # giver's only child in the tree is the taker's ancestor
        f = forest_with_chain(num_trees=2, budget=4)
        f.attach(1, SERVER, 0)
        f.attach(2, 1, 0)
        f.attach(3, 2, 0)
        f.attach(1, SERVER, 1)
        f.attach(4, 1, 1)
        f.attach(5, 1, 1)
        # peer 1's tree-0 child is 2, an ancestor of 3; dominant of 1 is tree 1
        with pytest.raises(NoChildToGiveError):
            swap_child(f, 3, 1, 0, declared_target=True)


# --------------------------------------------------------------- properties


@st.composite
def primitive_scripts(draw):
    return draw(
        st.lists(
            st.tuples(
                st.sampled_from(["adopt", "buy", "swap"]),
                st.integers(min_value=0, max_value=10_000),
                st.integers(min_value=0, max_value=10_000),
                st.integers(min_value=0, max_value=10_000),
                st.integers(min_value=1, max_value=6),
            ),
            max_size=40,
        )
    )


class TestEconomyLaws:
    @given(primitive_scripts(), st.integers(min_value=2, max_value=3))
    @settings(max_examples=100, deadline=None)
    def test_random_histories_keep_slots_funded(self, script, num_trees):
        peers = 8
        f = Forest(num_trees, peers + 1, 4)
        for pid in range(1, peers + 1):
            f.register_peer(pid, 4)
        applied = 0
        for kind, a, b, c, pay in script:
            x = 1 + a % peers
            y = 1 + b % peers
            k = c % num_trees
            try:
                if kind == "adopt":
                    prov = x if f.sub_count[x] else SERVER
                    adopt_free(f, prov, y, k)
                elif kind == "buy":
                    buy_position(f, x, y, k, pay)
                else:
                    swap_child(f, x, y, k, declared_target=bool(pay % 2))
                applied += 1
            except Exception:
                continue
            assert_valid(f, deep=True)
            ids = np.flatnonzero(f.peer_mask)
            free = f.budget[ids] - f.total_children[ids]
            assert (f.balance[ids] >= free).all(), "an unfunded free slot appeared"
        # money only leaves through recorded burns
        total = int(f.balance[f.present].sum()) + f.donations
        assert total == f.money_baseline
        assert applied >= 0
