import pytest

from app.models.matching import Matching, Witness
from app.services.recovery.forest import MatchForest, decode_witness, enumerate_t_witnesses


def depth_one_forest() -> MatchForest:
    forest = MatchForest(level=0)
    forest.add_root(3, 300)
    forest.split(128)
    return forest


def test_split_maps_children_to_halves():
    forest = depth_one_forest()
    assert forest.level == 1
    assert forest.targets == {6: 300, 7: 364}
    assert forest.trees == {(1, 3)}
    assert forest.leaves((1, 3)) == [6, 7]


def test_cut_leaves_sibling_subtrees():
    forest = depth_one_forest()
    forest.split(64)
    assert forest.trees == {(2, 3)}
    forest.cut(13)
    assert forest.trees == {(0, 12), (1, 7)}
    assert 13 not in forest.targets
    assert forest.tree_of(12) == (0, 12)
    assert forest.tree_of(15) == (1, 7)
    assert forest.tree_counts_by_origin() == {2: 1, 1: 1}


def test_cut_of_unknown_leaf():
    with pytest.raises(KeyError):
        depth_one_forest().cut(2)


def test_duplicate_root_rejected():
    forest = MatchForest(level=0)
    forest.add_root(1, 10)
    with pytest.raises(ValueError):
        forest.add_root(1, 20)


def test_forest_from_matching_round_trips_pairs():
    m = Matching(level=2, block_len=16, pairs=[(0, 1), (32, 33), (64, 60)])
    forest = MatchForest.from_matching(m)
    assert forest.matching(16) == m
    assert forest.max_depth == 0


def test_zero_budget_has_only_the_empty_witness():
    witnesses = list(enumerate_t_witnesses(depth_one_forest(), 0))
    assert len(witnesses) == 1
    assert witnesses[0][1] == []


def test_single_tree_budget_one():
    witnesses = list(enumerate_t_witnesses(depth_one_forest(), 1))
    assert [leaves for _, leaves in witnesses] == [[]]


def test_single_tree_budget_two():
    witnesses = list(enumerate_t_witnesses(depth_one_forest(), 2))
    assert [leaves for _, leaves in witnesses] == [[], [6], [7], [6, 7], [7, 6]]
    assert [w.B for w, _ in witnesses] == [
        {},
        {1: [1]},
        {1: [2]},
        {1: [1], 0: [1]},
        {1: [2], 0: [1]},
    ]
    assert all(w.weight == 0 and w.is_valid() for w, _ in witnesses)


def test_witness_leaves_are_distinct_and_live():
    forest = MatchForest(level=0)
    for block in range(4):
        forest.add_root(block, 100 * block)
    forest.split(64)
    forest.cut(2)
    seen = 0
    for witness, leaves in enumerate_t_witnesses(forest, 2):
        assert len(set(leaves)) == len(leaves)
        assert all(leaf in forest.targets for leaf in leaves)
        assert decode_witness(forest, witness) == leaves
        seen += 1
    assert seen > 5


def test_witnesses_come_in_nondecreasing_weight_then_size():
    forest = MatchForest(level=0)
    for block in range(3):
        forest.add_root(block, 10 * block)
    forest.split(32)
    forest.split(16)
    keys = [(w.weight, w.size) for w, _ in enumerate_t_witnesses(forest, 3)]
    assert keys == sorted(keys)
    assert keys[0] == (0, 0)


def test_witness_validity_rules():
    assert Witness(t=2, b={1: 1}, B={1: [1, 2]}).weight == 1
    assert Witness(t=2, b={}, B={0: [1, 2]}).is_valid()
    assert not Witness(t=2, b={}, B={0: [1, 2, 3]}).is_valid()
    assert not Witness(t=1, b={0: 0}, B={1: [3]}).is_valid()
    assert not Witness(t=1, b={2: 1}, B={}).is_valid()


def test_decode_witness_misses_forest():
    forest = depth_one_forest()
    assert decode_witness(forest, Witness(t=2, b={}, B={1: [3]})) is None
