import numpy as np
import pytest

from app.core.config import settings
from app.models.matching import Matching
from app.models.params import Scheme, derive_params
from app.services.bench.harness import brute_bad_self_matching, brute_max_k_plausible, brute_max_matching
from app.services.recovery.matchings import (
    detect_k_bad_self_matching,
    find_candidates,
    longest_chain,
    max_k_plausible_matching,
    max_monotone_disjoint_matching,
    plausibility_cost,
)
from app.services.sketch.iphash import hash_level
from app.services.sketch.smallbias import RandTable, entropy_size, sample_seed


@pytest.fixture
def params():
    return derive_params(1024, 2, Scheme.ALG1_RANDOM)


@pytest.fixture
def table(params, rng):
    return RandTable(sample_seed(params, rng.bytes(entropy_size(params))), params)


@pytest.fixture
def F(rng):
    return rng.integers(0, 2, size=1024).astype(np.uint8)


@pytest.mark.parametrize("trial", range(500))
def test_chain_matches_exhaustive_search(trial):
    rng = np.random.default_rng(trial)
    length = 4
    candidates = {
        block: sorted(rng.choice(40, size=int(rng.integers(0, 4)), replace=False).tolist())
        for block in range(8)
    }
    pairs = longest_chain(candidates, length)
    assert len(pairs) == brute_max_matching(candidates, length)
    m = Matching(level=0, block_len=length, pairs=pairs)
    assert m.monotone and m.disjoint and m.aligned


def test_chain_of_nothing():
    assert longest_chain({}, 8) == []
    assert longest_chain({0: [], 1: []}, 8) == []


def test_plausibility_cost_counts_offset_changes():
    m = Matching(level=0, block_len=8, pairs=[(0, 0), (8, 9), (16, 17), (24, 23)])
    assert plausibility_cost(m, 32, 31) == 0 + 1 + 0 + 2 + 0
    assert plausibility_cost(Matching(level=0, block_len=8), 32, 35) == 3


def test_unedited_file_matches_every_block(F, table, params):
    H = hash_level(F, 2, table, params)
    m = max_monotone_disjoint_matching(H, F, table, params, radius=params.k)
    assert len(m) == len(H)
    assert all(offset == 0 for offset in m.offsets())


def test_deletion_breaks_only_its_block(F, table, params):
    Fp = np.delete(F, 500)
    H = hash_level(F, 2, table, params)
    m = max_k_plausible_matching(range(len(H)), H, Fp, params.k, table, params)
    assert len(m) == len(H) - 1
    assert 500 // params.block_len(2) not in m.blocks()
    assert plausibility_cost(m, F.size, Fp.size) <= params.k
    assert m.monotone and m.disjoint


def test_plausible_matching_matches_exhaustive_search(F, table, params):
    Fp = np.insert(np.delete(F, 300), 700, 1)
    level = 3
    H = hash_level(F, level, table, params)
    blocks = list(range(0, len(H), 3))
    m = max_k_plausible_matching(blocks, H, Fp, params.k, table, params)
    k_off = params.k + abs(Fp.size - F.size)
    candidates = find_candidates(H, Fp, blocks, table, params, radius=k_off)
    expected = brute_max_k_plausible(candidates, params.block_len(level), params.k, F.size, Fp.size, level)
    assert len(m) == expected
    assert set(m.blocks()) <= set(blocks)


def test_random_file_has_no_bad_self_matching(F, table, params):
    found, witness = detect_k_bad_self_matching(F, 1, params.k, table, params)
    assert not found
    assert witness is None


def test_short_blocks_never_self_match(F, table, params):
    found, _ = detect_k_bad_self_matching(F, params.L, params.k, table, params)
    assert not found


def test_tiny_digests_self_match(rng):
    params = derive_params(1024, 2, Scheme.ALG1_RANDOM, o=1)
    table = RandTable(sample_seed(params, rng.bytes(entropy_size(params))), params)
    F = rng.integers(0, 2, size=1024).astype(np.uint8)
    found, witness = detect_k_bad_self_matching(F, 2, params.k, table, params)
    assert found
    assert len(witness) == params.k
    assert witness.monotone and witness.disjoint
    for source, target in witness.pairs:
        assert source != target
    assert brute_bad_self_matching(F, 2, params.k, table, params)


@pytest.mark.parametrize("trial", range(500))
def test_detector_matches_exhaustive_search_on_small_files(trial):
    rng = np.random.default_rng([7, trial])
    k = int(rng.integers(1, 3))
    params = derive_params(256, k, Scheme.ALG1_RANDOM, o=int(rng.integers(2, 5)))
    table = RandTable(sample_seed(params, rng.bytes(entropy_size(params))), params)
    F = rng.integers(0, 2, size=params.n_pad).astype(np.uint8)
    level = int(rng.integers(0, params.identity_level()))
    found, witness = detect_k_bad_self_matching(F, level, k, table, params)
    assert found == brute_bad_self_matching(F, level, k, table, params)
    if found:
        assert len(witness) == k and witness.monotone and witness.disjoint


@pytest.mark.slow
@pytest.mark.parametrize("trial", range(4))
@pytest.mark.parametrize("level", [0, 1])
def test_detector_scans_every_offset_below_the_exact_limit(trial, level):
    rng = np.random.default_rng([11, trial])
    params = derive_params(2048, 2, Scheme.ALG1_RANDOM, o=8)
    assert params.n_pad <= settings.EXACT_DETECT_MAX_BITS
    table = RandTable(sample_seed(params, rng.bytes(entropy_size(params))), params)
    F = rng.integers(0, 2, size=params.n_pad).astype(np.uint8)
    found, witness = detect_k_bad_self_matching(F, level, params.k, table, params)
    assert found == brute_bad_self_matching(F, level, params.k, table, params)
    if found:
        assert len(witness) == params.k
