"""
Matching dynamic programs over level blocks.

Candidate targets for a block are the F' windows whose digest, computed at the block's
own table coordinates, equals the block's digest. Offsets are scanned exhaustively on
small inputs and inside a band otherwise; a block with no edits always lies within the
band when the edit budget holds.
"""
from bisect import bisect_right
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.models.matching import Matching
from app.models.params import Params
from app.services.sketch.iphash import INVALID_WINDOW, HashVector, block_window_digests, hash_level
from app.services.sketch.smallbias import RandTable

Candidates = Dict[int, List[int]]


def offset_range(params: Params, level: int, target_len: int, radius: Optional[int]) -> range:
    """Offsets d = target - source worth scanning for this level."""
    length = params.block_len(level)
    full = range(-(params.n_pad - length), target_len - length + 1)
    if radius is None or params.n_pad <= settings.FULL_SCAN_MAX_BITS:
        return full
    return range(max(full.start, -radius), min(full.stop, radius + 1))


def find_candidates(
    H: HashVector,
    Fp: np.ndarray,
    blocks: Sequence[int],
    table: RandTable,
    params: Params,
    radius: Optional[int] = None,
    exclude_equal_to: Optional[np.ndarray] = None,
) -> Candidates:
    """
    Hash-consistent target starts per block, ascending.

    Args:
        H: Digests of the level
        Fp: Bits the targets come from
        blocks: Block indices to match
        table: Randomness table
        params: Scheme parameters
        radius: Offset band (None scans every offset)
        exclude_equal_to: When given, drop windows whose bits equal this string's block
            (used to keep only unequal pairs for bad self-matchings)

    Returns:
        Map block -> sorted target starts
    """
    level = H.level
    length = params.block_len(level)
    blocks = np.asarray(sorted(blocks), dtype=np.int64)
    found: Candidates = {int(j): [] for j in blocks}
    if blocks.size == 0:
        return found
    starts = blocks * length
    wanted = H.digests[blocks]
    offsets = np.arange(length, dtype=np.int64)
    for d in offset_range(params, level, Fp.size, radius):
        targets = starts + d
        digests = block_window_digests(Fp, blocks, targets, level, table, params)
        hit = (digests == wanted) & (digests != INVALID_WINDOW)
        if exclude_equal_to is not None and hit.any():
            idx = np.nonzero(hit)[0]
            same = (exclude_equal_to[starts[idx][:, None] + offsets] == Fp[targets[idx][:, None] + offsets]).all(axis=1)
            hit[idx[same]] = False
        for v in np.nonzero(hit)[0].tolist():
            found[int(blocks[v])].append(int(targets[v]))
    for targets in found.values():
        targets.sort()
    return found


def longest_chain(candidates: Candidates, length: int) -> List[Tuple[int, int]]:
    """
    Maximum monotone disjoint selection of at most one target per block.

    Patience-style DP: best_end[c] is the smallest frontier (last target + length)
    reachable with c + 1 pairs; ties keep the earliest frontier.
    """
    best_end: List[int] = []
    tails: List[Optional[tuple]] = []
    for block in sorted(candidates):
        updates: Dict[int, Tuple[int, tuple]] = {}
        for target in candidates[block]:
            c = bisect_right(best_end, target)
            end = target + length
            if c in updates and updates[c][0] <= end:
                continue
            parent = tails[c - 1] if c > 0 else None
            updates[c] = (end, (block, target, parent))
        for c, (end, node) in sorted(updates.items()):
            if c == len(best_end):
                best_end.append(end)
                tails.append(node)
            elif end < best_end[c]:
                best_end[c] = end
                tails[c] = node

    pairs = []
    node = tails[-1] if tails else None
    while node is not None:
        block, target, node = node
        pairs.append((block * length, target))
    pairs.reverse()
    return pairs


def max_monotone_disjoint_matching(
    H: HashVector,
    Fp: np.ndarray,
    table: RandTable,
    params: Params,
    radius: Optional[int] = None,
) -> Matching:
    """
    Largest level matching of every block into Fp that is monotone and disjoint.

    Args:
        H: Recovered digests of the level
        Fp: Padded F' bits
        table: Randomness table
        params: Scheme parameters
        radius: Offset band for large inputs

    Returns:
        The matching, pairs ordered by source
    """
    length = params.block_len(H.level)
    candidates = find_candidates(H, Fp, range(len(H)), table, params, radius)
    return Matching(level=H.level, block_len=length, pairs=longest_chain(candidates, length))


def plausibility_cost(m: Matching, lenF: int, lenFp: int) -> int:
    """Insertions and deletions needed to explain the offsets of a monotone matching."""
    drift = lenFp - lenF
    if not m.pairs:
        return abs(drift)
    offsets = m.offsets()
    cost = abs(offsets[0]) + abs(offsets[-1] - drift)
    cost += sum(abs(b - a) for a, b in zip(offsets, offsets[1:]))
    return cost


def max_k_plausible_matching(
    unmatched_blocks: Sequence[int],
    H: HashVector,
    Fp: np.ndarray,
    k: int,
    table: RandTable,
    params: Params,
) -> Matching:
    """
    Largest disjoint monotone matching of the given blocks with plausibility cost <= k.

    Offsets are confined to [-k_off, k_off], k_off = k + | |F| - |F'| |, since larger
    offsets cannot occur in a k-plausible matching. DP over candidate pairs with the
    budget spent so far as the second state coordinate.
    """
    level = H.level
    length = params.block_len(level)
    lenF = params.n_pad
    drift = Fp.size - lenF
    k_off = k + abs(drift)
    blocks = sorted(int(j) for j in unmatched_blocks)
    if not blocks:
        return Matching(level=level, block_len=length)

    candidates = find_candidates(H, Fp, blocks, table, params, radius=k_off)
    items = []
    for j in blocks:
        for target in candidates[j]:
            delta = target - j * length
            if abs(delta) <= k_off:
                items.append((j, delta, target))
    if not items:
        return Matching(level=level, block_len=length)

    width = k + 1
    count = np.full((len(items), width), -1, dtype=np.int64)
    parent = np.full((len(items), width), -1, dtype=np.int64)
    budgets = np.arange(width, dtype=np.int64)
    for e, (j, delta, target) in enumerate(items):
        if abs(delta) <= k:
            count[e, abs(delta)] = 1
        for e0 in range(e):
            j0, delta0, target0 = items[e0]
            if j0 >= j or target0 + length > target:
                continue
            step = abs(delta - delta0)
            if step > k:
                continue
            source = count[e0, :width - step]
            proposal = np.where(source >= 0, source + 1, -1)
            better = proposal > count[e, step:]
            if better.any():
                count[e, step:][better] = proposal[better]
                parent[e, step:][better] = e0 * width + budgets[:width - step][better]

    best = None
    for e, (_, delta, _) in enumerate(items):
        tail = abs(delta - drift)
        for b in range(width):
            if count[e, b] <= 0 or b + tail > k:
                continue
            key = (-int(count[e, b]), b + tail, e)
            if best is None or key < best[0]:
                best = (key, e, b)
    if best is None:
        return Matching(level=level, block_len=length)

    pairs = []
    e, b = best[1], best[2]
    while e >= 0:
        j, _, target = items[e]
        pairs.append((j * length, target))
        link = int(parent[e, b])
        if link < 0:
            break
        e, b = divmod(link, width)
    pairs.reverse()
    return Matching(level=level, block_len=length, pairs=pairs)


def detect_k_bad_self_matching(
    F_padded: np.ndarray,
    level: int,
    k: int,
    table: RandTable,
    params: Params,
    H: Optional[HashVector] = None,
    radius: Optional[int] = None,
) -> Tuple[bool, Optional[Matching]]:
    """
    Search for k blocks of F matched monotonically and disjointly onto unequal
    substrings of F with equal digests.

    Args:
        F_padded: Padded file bits
        level: Level whose blocks are tested
        k: Matching size that counts as bad
        table: Randomness table under test
        params: Scheme parameters
        H: Precomputed digests of the level
        radius: Offset band; by default every offset is scanned up to
            EXACT_DETECT_MAX_BITS padded bits and a 3k band beyond

    Returns:
        (found, witness matching of exactly k pairs when found)
    """
    length = params.block_len(level)
    if length <= params.o or k <= 0:
        return (k <= 0, Matching(level=level, block_len=length) if k <= 0 else None)
    if H is None:
        H = hash_level(F_padded, level, table, params)
    if radius is None and params.n_pad > settings.EXACT_DETECT_MAX_BITS:
        radius = 3 * params.k
    candidates = find_candidates(
        H, F_padded, range(len(H)), table, params, radius=radius, exclude_equal_to=F_padded
    )
    if sum(1 for targets in candidates.values() if targets) < k:
        return False, None
    pairs = longest_chain(candidates, length)
    if len(pairs) < k:
        return False, None
    return True, Matching(level=level, block_len=length, pairs=pairs[:k])
