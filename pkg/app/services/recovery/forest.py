"""
Forest of still-consistent matches and t-witness enumeration.

Every tree is a complete binary tree: a match made at some origin level splits into two
child matches per level, and removing a leaf removes its whole root path, which leaves
the sibling subtrees along that path as new, smaller complete trees. A tree is therefore
fully described by (depth, root block), its leaves being the current-level blocks
root * 2^depth ... root * 2^depth + 2^depth - 1.
"""
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from app.models.matching import Matching, Witness

Tree = Tuple[int, int]  # (depth, root block at level current - depth)


def _cut_tree(trees: FrozenSet[Tree], tree: Tree, leaf: int) -> FrozenSet[Tree]:
    depth, _ = tree
    siblings = [(h, (leaf >> h) ^ 1) for h in range(depth)]
    return (trees - {tree}) | frozenset(siblings)


def _trees_of_depth(trees: FrozenSet[Tree], depth: int) -> List[Tree]:
    return sorted((t for t in trees if t[0] == depth), key=lambda t: t[1])


class MatchForest:
    """Leaves are the current level's matches, keyed by F block index with F' target start."""

    def __init__(self, level: int = 0):
        self.level = level
        self.trees: set = set()
        self.targets: Dict[int, int] = {}

    @classmethod
    def from_matching(cls, matching: Matching) -> "MatchForest":
        forest = cls(matching.level)
        for source, target in matching.pairs:
            forest.add_root(source // matching.block_len, target)
        return forest

    def __len__(self) -> int:
        return len(self.targets)

    def add_root(self, block: int, target: int) -> None:
        if block in self.targets:
            raise ValueError(f"block {block} is already matched")
        self.trees.add((0, block))
        self.targets[block] = target

    def tree_of(self, leaf: int) -> Optional[Tree]:
        for depth in {d for d, _ in self.trees}:
            if (depth, leaf >> depth) in self.trees:
                return depth, leaf >> depth
        return None

    def leaves(self, tree: Tree) -> List[int]:
        depth, root = tree
        return list(range(root << depth, (root + 1) << depth))

    def cut(self, leaf: int) -> None:
        """Remove a leaf with its root path; the path's other subtrees become trees."""
        tree = self.tree_of(leaf)
        if tree is None:
            raise KeyError(f"block {leaf} is not a leaf")
        self.trees = set(_cut_tree(frozenset(self.trees), tree, leaf))
        del self.targets[leaf]

    def split(self, block_len: int) -> None:
        """Descend one level: leaf j at target t becomes 2j at t and 2j+1 at t + block_len / 2."""
        half = block_len // 2
        targets = {}
        for block, target in self.targets.items():
            targets[2 * block] = target
            targets[2 * block + 1] = target + half
        self.targets = targets
        self.trees = {(depth + 1, root) for depth, root in self.trees}
        self.level += 1

    def matching(self, block_len: int) -> Matching:
        pairs = [(block * block_len, self.targets[block]) for block in sorted(self.targets)]
        return Matching(level=self.level, block_len=block_len, pairs=pairs)

    def trees_by_depth(self) -> Dict[int, List[Tree]]:
        by_depth: Dict[int, List[Tree]] = {}
        for tree in sorted(self.trees, key=lambda t: (t[0], t[1])):
            by_depth.setdefault(tree[0], []).append(tree)
        return by_depth

    def tree_counts_by_origin(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for depth, _ in self.trees:
            origin = self.level - depth
            counts[origin] = counts.get(origin, 0) + 1
        return counts

    @property
    def max_depth(self) -> int:
        return max((d for d, _ in self.trees), default=0)

    def snapshot(self) -> FrozenSet[Tree]:
        return frozenset(self.trees)


def _select(trees: FrozenSet[Tree], depth: int, j: int) -> Optional[Tuple[FrozenSet[Tree], int]]:
    """Apply selection j (1-based) of B_depth; None when it points past the live trees."""
    pool = _trees_of_depth(trees, depth)
    index, position = divmod(j - 1, 1 << depth)
    if index >= len(pool):
        return None
    tree = pool[index]
    leaf = (tree[1] << depth) + position
    return _cut_tree(trees, tree, leaf), leaf


def decode_witness(forest: MatchForest, witness: Witness) -> Optional[List[int]]:
    """
    Leaves a witness selects, or None when a selection misses the forest.

    B_i sets are processed from the largest i down and each set in ascending order;
    selection j names leaf (j - 1) mod 2^i of tree (j - 1) div 2^i among the live
    depth-i trees ordered by root position. Each selected leaf is cut before the next
    selection, so no two selections share an ancestor match.
    """
    trees = forest.snapshot()
    selected = []
    for depth in sorted(witness.B, reverse=True):
        for j in sorted(witness.B[depth]):
            step = _select(trees, depth, j)
            if step is None:
                return None
            trees, leaf = step
            selected.append(leaf)
    return selected


def enumerate_t_witnesses(forest: MatchForest, t: int) -> Iterator[Tuple[Witness, List[int]]]:
    """
    Every valid t-witness over the forest with the leaves it selects.

    Witnesses come in nondecreasing weight sum_i i * b_i with b_i = max(0, |B_i| - t >> i);
    within a weight, in shortlex order: fewer selections first, then depth-first
    lexicographic with the deepest B_i varying slowest. Depth indices run over
    0 .. min(max tree depth, t - 1); selections that miss the forest are pruned during
    the search.
    """
    depths = list(range(min(forest.max_depth, t - 1), -1, -1))

    def search(
        position: int,
        trees: FrozenSet[Tree],
        weight: int,
        size: int,
        chosen: Dict[int, List[int]],
        leaves: List[int],
    ) -> Iterator[Tuple[Dict[int, List[int]], List[int]]]:
        if position == len(depths):
            if weight == 0 and size == 0:
                yield chosen, leaves
            return
        depth = depths[position]
        free = t >> depth
        extra = weight // depth if depth > 0 else 0
        limit = min(free + extra, t << depth, size)

        def choose(start: int, picked: List[int], state: FrozenSet[Tree], got: List[int]):
            paid = depth * max(0, len(picked) - free)
            if paid <= weight:
                branch = dict(chosen)
                if picked:
                    branch[depth] = list(picked)
                yield from search(position + 1, state, weight - paid, size - len(picked), branch, got)
            if len(picked) >= limit:
                return
            for j in range(start, (t << depth) + 1):
                step = _select(state, depth, j)
                if step is None:
                    break
                next_state, leaf = step
                yield from choose(j + 1, picked + [j], next_state, got + [leaf])

        yield from choose(1, [], trees, leaves)

    for weight in range(t + 1):
        for size in range(3 * t + 1):
            for B, leaves in search(0, forest.snapshot(), weight, size, {}, []):
                b = {i: max(0, len(s) - (t >> i)) for i, s in B.items()}
                yield Witness(t=t, b={i: c for i, c in b.items() if c}, B=B), leaves
