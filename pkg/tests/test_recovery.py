import numpy as np
import pytest

from app.core.config import settings
from app.core.errors import (
    ExchangeError,
    FieldMismatch,
    FinalCheckMismatch,
    LengthMismatch,
    ParameterError,
    WitnessSearchExhausted,
)
from app.models.params import Scheme, derive_params
from app.models.report import RecoveryReport
from app.services.bench.harness import mutate
from app.services.recovery.forest import MatchForest
from app.services.recovery.recovery import (
    RepairBudget,
    _padded_target,
    reconstruct,
    recover_alg1,
    recover_alg2,
    repair_level_colored,
)
from app.services.sketch.codec import deserialize, serialize
from app.services.sketch.iphash import HashVector, hash_level
from app.services.sketch.levelcode import GAP
from app.services.sketch.smallbias import RandTable, entropy_size
from app.services.sketch.summary import build_summary, colors_for_level, expand_entropy, padded_file, verification_payload
from app.utils.bits import bits_to_bytes, bytes_to_bits


def summarize(F: bytes, k: int, scheme: Scheme, seed: str = "5eed"):
    params = derive_params(8 * len(F), k, scheme)
    entropy = None if scheme == Scheme.DETERMINISTIC else expand_entropy(seed, entropy_size(params))
    return deserialize(serialize(build_summary(F, params, entropy=entropy)))


def test_alg1_recovers_from_unchanged_copy(random_file):
    data, report = reconstruct(summarize(random_file, 2, Scheme.ALG1_RANDOM), random_file)
    assert data == random_file
    assert report.final_check_ok
    assert report.total_corrections == 0


@pytest.mark.parametrize("weights", [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)])
def test_alg1_recovers_within_budget(random_file, rng, weights):
    Fp, script = mutate(random_file, 2, rng, weights=weights)
    assert len(script) == 2
    s = summarize(random_file, 2, Scheme.ALG1_RANDOM)
    data, report = reconstruct(s, Fp)
    assert data == random_file
    assert report.identity_level == s.params().identity_level()
    assert len(report.levels) == report.identity_level


def test_alg1_counts_guess_errors_when_given_the_truth(random_file, rng):
    Fp, _ = mutate(random_file, 2, rng, weights=(0, 0, 1))
    s = summarize(random_file, 2, Scheme.ALG1_RANDOM)
    data = recover_alg1(s, Fp, truth=random_file)
    assert data == random_file

    report = RecoveryReport(scheme=s.scheme, n=s.n, k=s.k)
    recover_alg1(s, Fp, report=report, truth=random_file)
    assert all(level.guess_errors is not None for level in report.levels)
    assert all(level.corrections == level.guess_errors for level in report.levels)


def test_recovery_accepts_non_byte_lengths(rng):
    F = rng.integers(0, 2, size=1001).astype(np.uint8)
    params = derive_params(1001, 2, Scheme.ALG1_RANDOM)
    s = build_summary(F, params, entropy=expand_entropy("0a", entropy_size(params)))
    Fp, _ = mutate(F, 2, rng)
    data, _ = reconstruct(s, Fp)
    recovered = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    assert np.array_equal(recovered[:1001], F)
    assert not recovered[1001:].any()


@pytest.mark.slow
def test_deterministic_summary_recovers(random_file, rng):
    Fp, _ = mutate(random_file, 2, rng)
    data, report = reconstruct(summarize(random_file, 2, Scheme.DETERMINISTIC), Fp)
    assert data == random_file
    assert report.scheme == Scheme.DETERMINISTIC


def test_tampered_final_check_is_caught(random_file):
    s = summarize(random_file, 2, Scheme.ALG1_RANDOM)
    bad = s.model_copy(update={"final_check": bytes(b ^ 0xFF for b in s.final_check)})
    with pytest.raises(FinalCheckMismatch):
        reconstruct(bad, random_file)


def test_field_parameters_are_checked(random_file):
    s = summarize(random_file, 2, Scheme.ALG1_RANDOM)
    with pytest.raises(FieldMismatch):
        recover_alg1(s.model_copy(update={"poly": s.poly ^ 0b10}), random_file)
    with pytest.raises(LengthMismatch):
        recover_alg1(s.model_copy(update={"w": 16}), random_file)


def test_far_copy_fails_loudly(random_file, rng):
    Fp, _ = mutate(random_file, 60, rng)
    with pytest.raises(ExchangeError):
        reconstruct(summarize(random_file, 2, Scheme.ALG1_RANDOM), Fp)


def test_schemes_are_not_interchangeable(random_file):
    with pytest.raises(ParameterError):
        recover_alg1(summarize(random_file, 2, Scheme.ALG2_OPTIMAL), random_file)
    with pytest.raises(ParameterError):
        recover_alg2(summarize(random_file, 2, Scheme.ALG1_RANDOM), random_file)


@pytest.mark.parametrize("weights", [(0, 0, 1), (1, 1, 1)])
def test_alg2_recovers_within_budget(random_file, rng, weights):
    Fp, _ = mutate(random_file, 2, rng, weights=weights)
    data, report = reconstruct(summarize(random_file, 2, Scheme.ALG2_OPTIMAL), Fp)
    assert data == random_file
    assert report.final_check_ok
    assert all(level.witnesses_tried >= 1 for level in report.levels)


def test_alg2_report_tracks_the_forest(random_file, rng):
    Fp, _ = mutate(random_file, 1, rng, weights=(0, 0, 1))
    _, report = reconstruct(summarize(random_file, 2, Scheme.ALG2_OPTIMAL), Fp, truth=random_file)
    first = report.levels[0]
    assert first.new_matches == first.matching_size
    assert first.matching_size >= 7
    assert sum(first.tree_counts.values()) == first.matching_size


def test_alg2_summary_is_smaller_than_alg1(random_file):
    alg1 = serialize(summarize(random_file, 2, Scheme.ALG1_RANDOM))
    alg2 = serialize(summarize(random_file, 2, Scheme.ALG2_OPTIMAL))
    assert len(alg2) < len(alg1)


def test_witness_cap_is_enforced(random_file):
    s = summarize(random_file, 2, Scheme.ALG2_OPTIMAL)
    with pytest.raises(WitnessSearchExhausted):
        reconstruct(s, random_file, budget=RepairBudget(witness_cap=0))


def test_colored_path_on_unchanged_copy(random_file):
    s = summarize(random_file, 11, Scheme.ALG2_OPTIMAL)
    assert s.params().color_count == 2
    data, report = reconstruct(s, random_file)
    assert data == random_file
    assert report.total_corrections == 0


def test_colored_repair_fixes_a_wrong_leaf_and_a_gap(random_file):
    s = summarize(random_file, 11, Scheme.ALG2_OPTIMAL)
    params = s.params()
    table = RandTable(s.seed, params)
    F_padded = padded_file(random_file, params)
    truth = hash_level(F_padded, 1, table, params)
    forest = MatchForest(level=0)
    for block in range(params.block_count(0)):
        forest.add_root(block, block * params.block_len(0))
    forest.split(params.block_len(0))

    digests = truth.digests.copy()
    digests[2] ^= 0x5A
    digests[50] = GAP
    guess = HashVector(level=1, digests=digests, o=params.o)
    repaired = repair_level_colored(
        guess,
        forest,
        verification_payload(truth, table, params),
        colors_for_level(table, params, 1),
        10,
        table,
        params,
    )
    assert repaired == truth


def test_recovery_ignores_later_changes_to_the_constants(random_file, rng, monkeypatch):
    alg1 = summarize(random_file, 2, Scheme.ALG1_RANDOM)
    alg2 = summarize(random_file, 2, Scheme.ALG2_OPTIMAL)
    Fp, _ = mutate(random_file, 2, rng)
    monkeypatch.setattr(settings, "BIAS_CONSTANT", 3)
    monkeypatch.setattr(settings, "VERIFY_MULTIPLIER", 2)
    monkeypatch.setattr(settings, "FINAL_CHECK_BITS", 16)
    monkeypatch.setattr(settings, "COLOR_HASH_BITS", 8)
    for s in (alg1, alg2):
        data, report = reconstruct(s, Fp)
        assert data == random_file
        assert report.final_check_ok


def test_byte_copy_of_a_non_byte_file_loses_its_fill(rng):
    F = rng.integers(0, 2, size=1001).astype(np.uint8)
    params = derive_params(1001, 2, Scheme.ALG1_RANDOM)
    s = build_summary(F, params, entropy=expand_entropy("0b", entropy_size(params)))
    assert _padded_target(bits_to_bytes(F), params).size == params.n_pad
    assert _padded_target(bits_to_bytes(F), params, fp_bits=1001).size == params.n_pad
    with pytest.raises(ParameterError):
        _padded_target(bits_to_bytes(F), params, fp_bits=1100)

    data, report = reconstruct(s, bits_to_bytes(F))
    assert report.total_corrections == 0
    Fp, _ = mutate(F, 2, rng, weights=(1, 0, 0))
    data, _ = reconstruct(s, bits_to_bytes(Fp), fp_bits=Fp.size)
    assert np.array_equal(bytes_to_bits(data)[:1001], F)


def test_alg1_at_four_thousand_bits(rng):
    F = rng.integers(0, 256, size=512, dtype=np.uint8).tobytes()
    s = summarize(F, 2, Scheme.ALG1_RANDOM)
    assert max(lane.width for lane in s.seed.lanes) == 128
    Fp, _ = mutate(F, 2, rng)
    data, _ = reconstruct(s, Fp)
    assert data == F


def test_alg2_with_three_edits(random_file, rng):
    s = summarize(random_file, 3, Scheme.ALG2_OPTIMAL)
    Fp, _ = mutate(random_file, 3, rng)
    data, report = reconstruct(s, Fp)
    assert data == random_file
    assert report.final_check_ok


@pytest.mark.parametrize("trial", range(10))
def test_matching_loses_at_most_one_block_per_edit(random_file, trial):
    rng = np.random.default_rng(trial)
    Fp, script = mutate(random_file, 2, rng)
    s = summarize(random_file, 2, Scheme.ALG1_RANDOM)
    params = s.params()
    data, report = reconstruct(s, Fp)
    assert data == random_file
    for level in report.levels:
        assert level.matching_size >= params.block_count(level.level) - len(script)
