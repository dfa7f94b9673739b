import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from diverank.aspects import DistanceModel, UserAspects
from diverank.errors import EmptyList, InvalidAlpha
from diverank.metrics import alpha_ndcg, ild, mrr, one_call, precision

from .oracles import alpha_ndcg_naive, ild_bruteforce, ndcg_binary


def aspects_from(aspects_of, user=1):
    """UserAspects whose membership inverts an item -> aspects mapping."""
    names = sorted({a for s in aspects_of.values() for a in s})
    membership = {a: frozenset(i for i, s in aspects_of.items() if a in s) for a in names}
    weights = {a: 1.0 / len(names) for a in names}
    return UserAspects(user, "test", tuple(names), membership, weights, {})


def test_ild_single_pair():
    dm = DistanceModel({1: {"A", "B"}, 2: {"A", "C", "D"}})
    assert ild([1, 2], dm) == pytest.approx(dm.distance(1, 2))


def test_ild_pair_value():
    class D:
        def matrix(self, items):
            import numpy as np

            return np.array([[0.0, 0.6], [0.6, 0.0]])

    assert ild([1, 2], D()) == pytest.approx(0.6)


def test_ild_identical_features():
    dm = DistanceModel({i: {"A", "B"} for i in range(1, 6)})
    assert ild([1, 2, 3, 4, 5], dm) == 0.0


def test_ild_singleton_and_empty():
    dm = DistanceModel({1: {"A"}})
    assert ild([1], dm) == 0.0
    with pytest.raises(EmptyList):
        ild([], dm)


lists_with_features = st.dictionaries(
    st.integers(1, 30), st.sets(st.sampled_from("ABCDEF")), min_size=1, max_size=10
)


@given(lists_with_features, st.randoms(use_true_random=False))
def test_ild_bruteforce_and_permutation_invariance(feats, rnd):
    dm = DistanceModel(feats)
    items = list(feats)
    value = ild(items, dm)
    assert value == pytest.approx(ild_bruteforce(items, dm.distance), abs=1e-12)
    shuffled = items[:]
    rnd.shuffle(shuffled)
    assert ild(shuffled, dm) == pytest.approx(value, abs=1e-12)
    assert 0.0 <= value <= 1.0


def test_alpha_ndcg_no_relevant_items():
    ua = aspects_from({1: {"a"}, 2: {"a"}})
    assert alpha_ndcg([1, 2], ua, {3}) == 0.0


def test_alpha_ndcg_ideal_order_scores_one():
    ua = aspects_from({1: {"a"}, 2: {"a", "b"}, 3: {"c"}})
    # greedy ideal: 2 (gain 2), then 3 (gain 1), then 1 (gain 0.5)
    assert alpha_ndcg([2, 3, 1], ua, {1, 2, 3}, 0.5) == pytest.approx(1.0)


def test_alpha_ndcg_two_items_one_aspect():
    ua = aspects_from({1: {"a"}, 2: {"a"}})
    gain = 1 / math.log2(2) + (1 - 0.5) / math.log2(3)
    assert gain == pytest.approx(1.3155, abs=1e-4)
    assert alpha_ndcg([1, 2], ua, {1, 2}, 0.5) == pytest.approx(1.0)


def test_alpha_ndcg_two_items_second_aspect():
    ua = aspects_from({1: {"a"}, 2: {"a", "b"}})
    # L = [1, 2]: 1/log2(2) + (0.5 + 1)/log2(3); ideal puts 2 first: 2 + 0.5/log2(3)
    expected = (1 + 1.5 / math.log2(3)) / (2 + 0.5 / math.log2(3))
    assert alpha_ndcg([1, 2], ua, {1, 2}, 0.5) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.84060, abs=1e-5)


def test_alpha_ndcg_matches_naive_oracle():
    rnd = random.Random(5)
    for _ in range(200):
        n_items, n_aspects = rnd.randint(1, 5), rnd.randint(1, 4)
        aspects_of = {i: {f"a{k}" for k in range(n_aspects) if rnd.random() < 0.5} for i in range(1, n_items + 3)}
        rel = {i for i in aspects_of if rnd.random() < 0.6}
        items = rnd.sample(sorted(aspects_of), n_items)
        alpha = rnd.choice([0.0, 0.25, 0.5, 1.0, rnd.random()])
        ua = aspects_from(aspects_of)
        if not ua.aspects:
            continue
        got = alpha_ndcg(items, ua, rel, alpha)
        assert 0.0 <= got <= 1.0
        assert got == pytest.approx(alpha_ndcg_naive(items, aspects_of, rel, alpha), abs=1e-9)


def test_alpha_zero_single_aspect_is_binary_ndcg():
    rnd = random.Random(9)
    for _ in range(200):
        pool = list(range(1, 15))
        rel = set(rnd.sample(pool, rnd.randint(0, 8)))
        items = rnd.sample(pool, rnd.randint(1, 8))
        n = rnd.randint(1, 10)
        ua = aspects_from({i: {"all"} for i in pool})
        assert alpha_ndcg(items[:n], ua, rel, 0.0, n) == pytest.approx(ndcg_binary(items, rel, n), abs=1e-12)


def test_alpha_ndcg_invalid_alpha():
    with pytest.raises(InvalidAlpha):
        alpha_ndcg([1], aspects_from({1: {"a"}}), {1}, 1.5)


def test_alpha_ndcg_user_without_aspects():
    ua = UserAspects(1, "test", ("a",), {"a": frozenset({1})}, {}, {})
    assert alpha_ndcg([1], ua, {1}) == 0.0


def test_precision_examples():
    assert precision(list(range(10)), {0, 4, 9}) == pytest.approx(0.3)
    assert precision([1, 2], set()) == 0.0
    assert precision([1, 2], {1, 2}) == 1.0


def test_mrr_examples():
    assert mrr([5, 6, 7, 8], {8}) == 0.25
    assert mrr([5, 6], {5}) == 1.0
    assert mrr([5, 6], {9}) == 0.0


def test_one_call_examples():
    assert one_call([1, 2, 3], {3}) == 1
    assert one_call([1, 2, 3], {4}) == 0
    assert one_call([1, 2, 3], set()) == 0


@given(st.lists(st.integers(1, 20), unique=True, min_size=1, max_size=10), st.sets(st.integers(1, 20)))
def test_relevance_bounded_by_one_call(items, rel):
    oc = one_call(items, rel)
    assert precision(items, rel) <= oc
    assert mrr(items, rel) <= oc
