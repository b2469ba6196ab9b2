"""
Recovery of F from a summary and a nearby file F'.

Alg1/Det summaries are decoded level by level: match the known level into F', guess the
next level from the matched substrings, and let the level's Reed-Solomon redundancy fix
the guess. Alg2 summaries keep a forest of still-consistent matches, extend it with
k-plausible matches of unmatched blocks, and repair each guessed level by searching
t-witnesses against the level's verification hashes.

Both stop descending at the first level whose blocks fit inside a digest, read F off
the digests there, and check the whole-file hash before returning.
"""
import math
from typing import Dict, List, Optional, Set

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import (
    DecodeFailure,
    ExchangeError,
    FieldMismatch,
    FinalCheckMismatch,
    LengthMismatch,
    ParameterError,
    WitnessSearchExhausted,
)
from app.models.matching import Matching
from app.models.params import Params, Scheme
from app.models.report import LevelReport, RecoveryReport
from app.models.summary import Summary
from app.services.coding.gf2 import solve_affine
from app.services.recovery.forest import MatchForest, enumerate_t_witnesses
from app.services.recovery.matchings import max_k_plausible_matching, max_monotone_disjoint_matching
from app.services.sketch.iphash import (
    INVALID_WINDOW,
    HashVector,
    block_window_digests,
    final_check_hash,
    hash_level,
    hash_string_of_hashes,
    verification_matrix,
)
from app.services.sketch.levelcode import GAP, choose_layout, decode_level, field_polynomial
from app.services.sketch.smallbias import RandTable
from app.services.sketch.summary import BitSource, as_bits, color_mask, colors_for_level, padded_file
from app.utils.audit_logger import audit_logger
from app.utils.bits import bits_to_bytes, bytes_to_bits, ints_to_rows


class RepairBudget:
    """Caps on the Alg2 witness search, counted per level"""

    def __init__(self, witness_cap: Optional[int] = None, candidate_cap: Optional[int] = None):
        self.witness_cap = settings.WITNESS_CAP if witness_cap is None else witness_cap
        self.candidate_cap = settings.CANDIDATE_CAP if candidate_cap is None else candidate_cap


def _padded_target(Fp: BitSource, params: Params, fp_bits: Optional[int] = None) -> np.ndarray:
    """
    F' followed by the same number of padding zeros F received.

    Byte input carries up to 7 fill bits at the end. Unless fp_bits gives the true
    length, F' is taken to carry the same fill as F, which is dropped here.
    """
    bits = as_bits(Fp)
    if fp_bits is None and isinstance(Fp, (bytes, bytearray)):
        fp_bits = max(0, bits.size - (-params.n) % 8)
    if fp_bits is not None:
        if not 0 <= fp_bits <= bits.size:
            raise ParameterError(f"F' bit length {fp_bits} outside [0, {bits.size}]")
        bits = bits[:fp_bits]
    return np.concatenate([bits, np.zeros(params.n_pad - params.n, dtype=np.uint8)])


def _padded_truth(truth: Optional[BitSource], params: Params) -> Optional[np.ndarray]:
    if truth is None:
        return None
    return padded_file(truth, params)


def _count_errors(guess: HashVector, truth_padded: Optional[np.ndarray], table: RandTable, params: Params) -> Optional[int]:
    if truth_padded is None:
        return None
    true = hash_level(truth_padded, guess.level, table, params)
    return int(np.count_nonzero(guess.digests != true.digests))


def _read_identity_level(H: HashVector, params: Params) -> np.ndarray:
    length = params.block_len(H.level)
    if length > params.o:
        raise ParameterError(f"level {H.level} blocks are longer than the digest width")
    return ints_to_rows(H.digests, params.o)[:, :length].reshape(-1)


def _finish(F_padded: np.ndarray, s: Summary, params: Params, table: RandTable, report: RecoveryReport) -> bytes:
    expected = bytes_to_bits(s.final_check)[:params.final_check_bits]
    ok = bool(np.array_equal(final_check_hash(F_padded, table)[:expected.size], expected))
    ok = ok and not F_padded[params.n:].any()
    report.final_check_ok = ok
    if not ok:
        audit_logger.recovery_finished(report, error="final check mismatch")
        raise FinalCheckMismatch("recovered file does not match the summary's whole-file hash")
    audit_logger.recovery_finished(report)
    return bits_to_bytes(F_padded[:params.n])


def guess_next_level(M: Matching, Fp: np.ndarray, level: int, table: RandTable, params: Params) -> HashVector:
    """
    Digests of level + 1 predicted from a level matching.

    Block j matched at target t predicts children 2j and 2j+1 from the F' substrings at
    t and t + block_len / 2, hashed at the children's own F coordinates; every other
    entry is a gap.

    Args:
        M: Matching of level `level`
        Fp: Padded F' bits
        level: Level of M
        table: Randomness table
        params: Scheme parameters

    Returns:
        Guessed HashVector of level + 1 with GAP entries
    """
    child = level + 1
    digests = np.full(params.block_count(child), GAP, dtype=np.int64)
    if not M.pairs:
        return HashVector(level=child, digests=digests, o=params.o)
    half = params.block_len(child)
    sources = np.asarray([i for i, _ in M.pairs], dtype=np.int64) // M.block_len
    targets = np.asarray([t for _, t in M.pairs], dtype=np.int64)
    ids = np.concatenate([2 * sources, 2 * sources + 1])
    starts = np.concatenate([targets, targets + half])
    values = block_window_digests(Fp, ids, starts, child, table, params)
    digests[ids] = np.where(values == INVALID_WINDOW, GAP, values)
    return HashVector(level=child, digests=digests, o=params.o)


def _check_field(s: Summary, params: Params):
    layout = choose_layout(params)
    if layout.w != s.w:
        raise LengthMismatch(f"summary uses {s.w}-bit symbols, parameters imply {layout.w}")
    if field_polynomial(layout) != s.poly:
        raise FieldMismatch(f"summary field polynomial {s.poly:#x} differs from {field_polynomial(layout):#x}")
    return layout


def recover_alg1(
    s: Summary,
    Fp: BitSource,
    report: Optional[RecoveryReport] = None,
    truth: Optional[BitSource] = None,
    fp_bits: Optional[int] = None,
) -> bytes:
    """
    Reconstruct F from an Alg1 or Det summary.

    Args:
        s: The summary
        Fp: The receiver's file (bytes or bits)
        report: Filled with per-level diagnostics when given
        truth: The true F, only for instrumented runs counting guess errors
        fp_bits: Bit length of F' when it arrives as bytes with unknown fill

    Returns:
        F as bytes (the last byte zero-filled when n is not a multiple of 8)
    """
    if s.scheme == Scheme.ALG2_OPTIMAL:
        raise ParameterError("Alg2 summaries are recovered by recover_alg2")
    params = s.params()
    if report is None:
        report = RecoveryReport(scheme=s.scheme, n=s.n, k=s.k)
    table = RandTable(s.seed, params)
    layout = _check_field(s, params)
    Fp_padded = _padded_target(Fp, params, fp_bits)
    truth_padded = _padded_truth(truth, params)
    radius = params.k + abs(Fp_padded.size - params.n_pad)

    H = HashVector(level=0, digests=np.asarray(s.level0, dtype=np.int64), o=params.o)
    level = 0
    while params.block_len(level) > params.o:
        M = max_monotone_disjoint_matching(H, Fp_padded, table, params, radius=radius)
        guess = guess_next_level(M, Fp_padded, level, table, params)
        try:
            digests = decode_level(guess.digests, s.payloads[level], layout)
        except DecodeFailure as e:
            audit_logger.log(
                action="level_decoded",
                resource_type="level",
                resource_id=str(level + 1),
                status="failure",
                params=params,
                details={"matching_size": len(M), "error": str(e)}
            )
            raise
        corrected = HashVector(level=level + 1, digests=digests, o=params.o)
        gaps = int(np.count_nonzero(guess.digests == GAP))
        report.levels.append(LevelReport(
            level=level,
            matching_size=len(M),
            gaps=gaps,
            guess_errors=_count_errors(guess, truth_padded, table, params),
            corrections=int(np.count_nonzero(guess.digests != digests)),
        ))
        logger.debug(f"level {level}: matched {len(M)} blocks, {gaps} gaps in the next-level guess")
        H = corrected
        level += 1

    report.identity_level = level
    return _finish(_read_identity_level(H, params), s, params, table, report)


def guess_from_forest(forest: MatchForest, Fp: np.ndarray, table: RandTable, params: Params) -> HashVector:
    """Digests of the forest's level guessed from its leaves' targets; gaps elsewhere."""
    level = forest.level
    digests = np.full(params.block_count(level), GAP, dtype=np.int64)
    if forest.targets:
        ids = np.asarray(sorted(forest.targets), dtype=np.int64)
        starts = np.asarray([forest.targets[j] for j in ids.tolist()], dtype=np.int64)
        values = block_window_digests(Fp, ids, starts, level, table, params)
        digests[ids] = np.where(values == INVALID_WINDOW, GAP, values)
    return HashVector(level=level, digests=digests, o=params.o)


class RepairStats:
    def __init__(self):
        self.witnesses = 0
        self.candidates = 0
        self.corrections = 0


def _solve_unknowns(
    known_bits: np.ndarray,
    unknown: List[int],
    target: np.ndarray,
    matrix: np.ndarray,
    o: int,
) -> tuple:
    """
    Digest values at the unknown positions that make the hash equal `target`.

    The hash is linear, so hash(known + x) = hash(known) + A x with A the matrix rows of
    the unknown bits. Small systems are enumerated value by value, larger ones solved by
    elimination; either way a solution is returned only when it is the only one.

    Returns:
        (digest values or None, candidates examined)
    """
    rhs = (target ^ ((known_bits.astype(np.int64) @ matrix.astype(np.int64)) & 1)).astype(np.uint8)
    rows = np.concatenate([np.arange(u * o, (u + 1) * o) for u in unknown]) if unknown else np.zeros(0, dtype=np.int64)
    A = matrix[rows].T.astype(np.uint8)
    unknown_bits = rows.size
    if unknown_bits == 0:
        return (np.zeros(0, dtype=np.int64) if not rhs.any() else None), 1

    if unknown_bits <= settings.ENUMERATE_VALUE_BITS:
        values = np.arange(1 << unknown_bits, dtype=np.int64)
        X = ((values[:, None] >> np.arange(unknown_bits, dtype=np.int64)) & 1).astype(np.int32)
        hits = np.nonzero(((X @ A.T.astype(np.int32)) & 1 == rhs).all(axis=1))[0]
        if hits.size != 1:
            return None, values.size
        x = X[hits[0]].astype(np.uint8)
        count = values.size
    else:
        x, nullity = solve_affine(A, rhs)
        if x is None or nullity > 0:
            return None, 1
        count = 1
    digits = x.reshape(len(unknown), o).astype(np.int64)
    return digits @ (np.int64(1) << np.arange(o, dtype=np.int64)), count


def _search_class(
    guess: HashVector,
    forest: MatchForest,
    target: np.ndarray,
    matrix: np.ndarray,
    t: int,
    budget: RepairBudget,
    stats: RepairStats,
    members: Optional[Set[int]] = None,
    mask: Optional[np.ndarray] = None,
) -> Optional[Dict[int, int]]:
    """First witness whose unknowns solve uniquely against one verification hash."""
    o = guess.o
    gaps = [int(j) for j in np.nonzero(guess.digests == GAP)[0] if members is None or j in members]
    seen: Set[tuple] = set()
    for _, leaves in enumerate_t_witnesses(forest, t):
        stats.witnesses += 1
        if stats.witnesses > budget.witness_cap:
            raise WitnessSearchExhausted(f"witness cap of {budget.witness_cap} reached at level {guess.level}")
        chosen = [leaf for leaf in leaves if members is None or leaf in members]
        unknown = tuple(sorted(set(gaps) | set(chosen)))
        if unknown in seen:
            continue
        seen.add(unknown)

        known = guess.digests.copy()
        known[list(unknown)] = 0
        known_bits = ints_to_rows(known, o).reshape(-1)
        if mask is not None:
            known_bits = known_bits * mask
        values, examined = _solve_unknowns(known_bits, list(unknown), target, matrix, o)
        stats.candidates += examined
        if stats.candidates > budget.candidate_cap:
            raise WitnessSearchExhausted(f"candidate cap of {budget.candidate_cap} reached at level {guess.level}")
        if values is not None:
            return {j: int(v) for j, v in zip(unknown, values.tolist())}
    return None


def _verify_bits(payload: bytes, params: Params) -> np.ndarray:
    bits = bytes_to_bits(payload)
    width = params.verify_width
    if params.color_count > 1:
        width += params.color_count * params.color_hash_bits
    if bits.size < width:
        raise LengthMismatch(f"verification payload holds {bits.size} bits, need {width}")
    return bits[:width]


def repair_level(
    guess: HashVector,
    forest: MatchForest,
    payload: bytes,
    t: int,
    table: RandTable,
    params: Params,
    budget: Optional[RepairBudget] = None,
    stats: Optional[RepairStats] = None,
) -> HashVector:
    """
    Fix a guessed level against its verification hash by witness search.

    For each t-witness in order, the gaps plus the leaves the witness selects become
    unknowns; the first witness whose unknowns have exactly one assignment reproducing
    the level's verification hash wins.

    Args:
        guess: Guessed digests of the forest's level, GAP where nothing is known
        forest: Forest whose leaves produced the guess
        payload: The level's verification payload from the summary
        t: Witness budget
        table: Randomness table
        params: Scheme parameters
        budget: Search caps
        stats: Counters updated in place

    Returns:
        The repaired HashVector
    """
    budget = budget if budget is not None else RepairBudget()
    stats = stats if stats is not None else RepairStats()
    target = _verify_bits(payload, params)[:params.verify_width]
    rows = len(guess) * params.o
    matrix = verification_matrix(table, guess.level, rows, params.verify_width)
    fixes = _search_class(guess, forest, target, matrix, t, budget, stats)
    if fixes is None:
        raise WitnessSearchExhausted(f"no {t}-witness repairs level {guess.level}")
    digests = guess.digests.copy()
    for j, value in fixes.items():
        digests[j] = value
    stats.corrections += int(np.count_nonzero(digests != guess.digests))
    return HashVector(level=guess.level, digests=digests, o=guess.o)


def repair_level_colored(
    guess: HashVector,
    forest: MatchForest,
    payload: bytes,
    colors: np.ndarray,
    t_color: int,
    table: RandTable,
    params: Params,
    budget: Optional[RepairBudget] = None,
    stats: Optional[RepairStats] = None,
) -> HashVector:
    """
    Repair each color class on its own against the class hash, then check the whole
    level against the level hash.

    Classes never touch each other's digests: a class's unknowns are its own gaps and
    the witness-selected leaves of its color. Failing classes are collected and raised
    together.
    """
    budget = budget if budget is not None else RepairBudget()
    stats = stats if stats is not None else RepairStats()
    bits = _verify_bits(payload, params)
    width = params.color_hash_bits
    rows = len(guess) * params.o
    digests = guess.digests.copy()
    failures: Dict[int, str] = {}
    for color in range(params.color_count):
        members = set(np.nonzero(colors == color)[0].tolist())
        column = params.verify_width + color * width
        target = bits[column:column + width]
        matrix = verification_matrix(table, guess.level, rows, width, column)
        mask = color_mask(colors, color, params.o)
        try:
            fixes = _search_class(guess, forest, target, matrix, t_color, budget, stats, members, mask)
        except WitnessSearchExhausted as e:
            failures[color] = str(e)
            continue
        if fixes is None:
            failures[color] = f"no {t_color}-witness repairs the class"
            continue
        for j, value in fixes.items():
            digests[j] = value
    if failures:
        raise WitnessSearchExhausted(
            f"{len(failures)} of {params.color_count} color classes failed at level {guess.level}",
            failures,
        )

    level_bits = ints_to_rows(digests, params.o).reshape(-1)
    check = hash_string_of_hashes(level_bits, params.verify_width, table, guess.level)
    if not np.array_equal(check, bits[:params.verify_width]):
        raise WitnessSearchExhausted(f"repaired level {guess.level} fails the level hash", {-1: "level hash"})
    stats.corrections += int(np.count_nonzero(digests != guess.digests))
    return HashVector(level=guess.level, digests=digests, o=guess.o)


def _prune(forest: MatchForest, H: HashVector, Fp: np.ndarray, table: RandTable, params: Params) -> int:
    """Cut every leaf whose target no longer hashes to the known digest."""
    if not forest.targets:
        return 0
    ids = np.asarray(sorted(forest.targets), dtype=np.int64)
    starts = np.asarray([forest.targets[j] for j in ids.tolist()], dtype=np.int64)
    values = block_window_digests(Fp, ids, starts, H.level, table, params)
    bad = ids[values != H.digests[ids]]
    for leaf in bad.tolist():
        forest.cut(leaf)
    return int(bad.size)


def recover_alg2(
    s: Summary,
    Fp: BitSource,
    budget: Optional[RepairBudget] = None,
    report: Optional[RecoveryReport] = None,
    truth: Optional[BitSource] = None,
    fp_bits: Optional[int] = None,
) -> bytes:
    """
    Reconstruct F from an Alg2 summary.

    Args:
        s: The summary
        Fp: The receiver's file (bytes or bits)
        budget: Witness and candidate caps per level
        report: Filled with per-level diagnostics when given
        truth: The true F, only for instrumented runs counting guess errors
        fp_bits: Bit length of F' when it arrives as bytes with unknown fill

    Returns:
        F as bytes
    """
    if s.scheme != Scheme.ALG2_OPTIMAL:
        raise ParameterError(f"scheme {s.scheme.value} summaries are recovered by recover_alg1")
    params = s.params()
    budget = budget if budget is not None else RepairBudget()
    if report is None:
        report = RecoveryReport(scheme=s.scheme, n=s.n, k=s.k)
    table = RandTable(s.seed, params)
    Fp_padded = _padded_target(Fp, params, fp_bits)
    truth_padded = _padded_truth(truth, params)
    t = 6 * params.k
    t_color = min(t, math.ceil(math.log2(max(2, params.n))))

    H = HashVector(level=0, digests=np.asarray(s.level0, dtype=np.int64), o=params.o)
    forest = MatchForest(level=0)
    level = 0
    while params.block_len(level) > params.o:
        pruned = _prune(forest, H, Fp_padded, table, params)
        unmatched = [j for j in range(len(H)) if j not in forest.targets]
        delta = max_k_plausible_matching(unmatched, H, Fp_padded, params.k, table, params)
        for source, target in delta.pairs:
            forest.add_root(source // delta.block_len, target)
        matching_size = len(forest)
        forest.split(params.block_len(level))

        guess = guess_from_forest(forest, Fp_padded, table, params)
        stats = RepairStats()
        try:
            if params.color_count > 1:
                colors = colors_for_level(table, params, level + 1)
                H = repair_level_colored(
                    guess, forest, s.payloads[level], colors, t_color, table, params, budget, stats
                )
            else:
                H = repair_level(guess, forest, s.payloads[level], t, table, params, budget, stats)
        except WitnessSearchExhausted as e:
            audit_logger.log(
                action="level_repaired",
                resource_type="level",
                resource_id=str(level + 1),
                status="failure",
                params=params,
                details={"witnesses": stats.witnesses, "candidates": stats.candidates, "error": str(e)}
            )
            raise

        report.levels.append(LevelReport(
            level=level,
            matching_size=matching_size,
            new_matches=len(delta),
            pruned=pruned,
            gaps=int(np.count_nonzero(guess.digests == GAP)),
            guess_errors=_count_errors(guess, truth_padded, table, params),
            corrections=stats.corrections,
            witnesses_tried=stats.witnesses,
            candidates_tried=stats.candidates,
            tree_counts=forest.tree_counts_by_origin(),
        ))
        logger.debug(
            f"level {level}: {matching_size} matches ({len(delta)} new, {pruned} pruned), "
            f"{stats.witnesses} witnesses tried"
        )
        level += 1

    report.identity_level = level
    return _finish(_read_identity_level(H, params), s, params, table, report)


def reconstruct(
    s: Summary,
    Fp: BitSource,
    budget: Optional[RepairBudget] = None,
    truth: Optional[BitSource] = None,
    fp_bits: Optional[int] = None,
) -> tuple:
    """
    Recover F with the algorithm the summary's scheme calls for.

    Returns:
        (F bytes, RecoveryReport)
    """
    report = RecoveryReport(scheme=s.scheme, n=s.n, k=s.k)
    try:
        if s.scheme == Scheme.ALG2_OPTIMAL:
            data = recover_alg2(s, Fp, budget=budget, report=report, truth=truth, fp_bits=fp_bits)
        else:
            data = recover_alg1(s, Fp, report=report, truth=truth, fp_bits=fp_bits)
    except FinalCheckMismatch:
        raise
    except ExchangeError as e:
        audit_logger.recovery_finished(report, error=str(e))
        raise
    return data, report
