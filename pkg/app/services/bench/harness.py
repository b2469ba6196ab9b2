"""
Test and benchmark support: edit mutations, edit-distance oracles, brute-force matching
oracles and the summary scaling benchmark.
"""
import csv
import math
import time
from functools import lru_cache
from itertools import combinations
from typing import Dict, IO, Iterable, List, Optional, Sequence, Tuple, Union

import Levenshtein
import numpy as np
from loguru import logger

from app.core.errors import ExchangeError
from app.models.bench import BenchRow, EditOp, EditScript
from app.models.matching import Matching
from app.models.params import Params, Scheme, derive_params
from app.services.recovery.matchings import plausibility_cost
from app.services.recovery.recovery import reconstruct
from app.services.sketch.codec import serialize
from app.services.sketch.iphash import block_window_digests, hash_level
from app.services.sketch.smallbias import RandTable, entropy_size
from app.services.sketch.summary import BitSource, as_bits, build_summary
from app.utils.audit_logger import audit_logger

Symbols = Union[bytes, np.ndarray, Sequence[int]]

CSV_COLUMNS = ["n", "k", "scheme", "seed", "summary_bits", "success", "micros"]


def apply_script(bits: BitSource, script: EditScript) -> np.ndarray:
    """Apply operations in order, each position referring to the string at that point."""
    out = list(as_bits(bits).tolist())
    for op in script.ops:
        if op.kind == "insert":
            out.insert(op.pos, op.bit)
        elif op.kind == "delete":
            del out[op.pos]
        else:
            out[op.pos] = op.bit
    return np.asarray(out, dtype=np.uint8)


def mutate(
    F: BitSource,
    k: int,
    rng: np.random.Generator,
    weights: Tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> Tuple[np.ndarray, EditScript]:
    """
    Apply exactly k random edits to the bits of F.

    Args:
        F: File bytes or bits
        k: Number of operations
        rng: Random generator
        weights: Relative frequency of insert, delete, substitute

    Returns:
        (mutated bits, the script that produced them)
    """
    bits = list(as_bits(F).tolist())
    p = np.asarray(weights, dtype=np.float64)
    p = p / p.sum()
    ops = []
    for _ in range(k):
        kind = ["insert", "delete", "substitute"][int(rng.choice(3, p=p))]
        if kind != "insert" and not bits:
            kind = "insert"
        if kind == "insert":
            pos = int(rng.integers(0, len(bits) + 1))
            bit = int(rng.integers(0, 2))
            bits.insert(pos, bit)
        elif kind == "delete":
            pos = int(rng.integers(0, len(bits)))
            bit = 0
            del bits[pos]
        else:
            pos = int(rng.integers(0, len(bits)))
            bit = 1 - bits[pos]
            bits[pos] = bit
        ops.append(EditOp(kind=kind, pos=pos, bit=bit))
    return np.asarray(bits, dtype=np.uint8), EditScript(ops=ops)


def _symbols(data: Symbols) -> np.ndarray:
    if isinstance(data, (bytes, bytearray)):
        return np.frombuffer(bytes(data), dtype=np.uint8).astype(np.int64)
    return np.asarray(data, dtype=np.int64)


def edit_distance(A: Symbols, B: Symbols, band: Optional[int] = None) -> Optional[int]:
    """
    Levenshtein distance; byte strings compare byte symbols, arrays compare elements.

    With `band`, None means the distance exceeds the band.
    """
    a, b = _symbols(A).tolist(), _symbols(B).tolist()
    if band is not None and abs(len(a) - len(b)) > band:
        return None
    distance = Levenshtein.distance(a, b, score_cutoff=band)
    if band is not None and distance > band:
        return None
    return int(distance)


def brute_max_matching(candidates: Dict[int, List[int]], length: int) -> int:
    """Largest monotone disjoint selection, by exhaustive search."""
    pairs = sorted((block, target) for block, targets in candidates.items() for target in targets)

    @lru_cache(maxsize=None)
    def best(index: int, last_block: int, frontier: int) -> int:
        if index == len(pairs):
            return 0
        block, target = pairs[index]
        skip = best(index + 1, last_block, frontier)
        if block > last_block and target >= frontier:
            return max(skip, 1 + best(index + 1, block, target + length))
        return skip

    return best(0, -1, -(1 << 62))


def brute_max_k_plausible(
    candidates: Dict[int, List[int]],
    length: int,
    k: int,
    lenF: int,
    lenFp: int,
    level: int = 0,
) -> int:
    """Largest monotone disjoint matching with plausibility cost <= k, exhaustively."""
    pairs = sorted((block, target) for block, targets in candidates.items() for target in targets)
    for size in range(len(pairs), 0, -1):
        for chosen in combinations(pairs, size):
            m = Matching(level=level, block_len=length, pairs=[(j * length, t) for j, t in chosen])
            blocks = [j for j, _ in chosen]
            if len(set(blocks)) != size or not m.monotone or not m.disjoint:
                continue
            if plausibility_cost(m, lenF, lenFp) <= k:
                return size
    return 0


def brute_bad_self_matching(F_padded: np.ndarray, level: int, k: int, table: RandTable, params: Params) -> bool:
    """Whether some k blocks match monotonically and disjointly onto unequal, equal-hash windows."""
    length = params.block_len(level)
    if length <= params.o:
        return k <= 0
    H = hash_level(F_padded, level, table, params)
    candidates: Dict[int, List[int]] = {}
    for j in range(len(H)):
        starts = np.arange(F_padded.size - length + 1, dtype=np.int64)
        digests = block_window_digests(F_padded, np.full(starts.size, j), starts, level, table, params)
        block = F_padded[j * length:(j + 1) * length]
        hits = [
            int(s) for s in starts[digests == H.digests[j]]
            if not np.array_equal(F_padded[s:s + length], block)
        ]
        if hits:
            candidates[j] = hits
    return brute_max_matching(candidates, length) >= k


def adversary_edits(
    codeword: np.ndarray,
    n: int,
    k: int,
    rng: np.random.Generator,
    placement: str = "uniform",
) -> Tuple[np.ndarray, EditScript]:
    """
    Place k edits on codeword bits.

    placement: "uniform" anywhere, "systematic" in the first n bits, "redundancy" in the
    tail, "boundary" straddling position n.
    """
    bits = list(np.asarray(codeword, dtype=np.uint8).tolist())
    ops = []
    for _ in range(k):
        kind = ["insert", "delete", "substitute"][int(rng.integers(0, 3))]
        size = len(bits)
        if placement == "systematic":
            lo, hi = 0, max(1, min(n, size))
        elif placement == "redundancy":
            lo, hi = min(n, size - 1), size
        elif placement == "boundary":
            lo, hi = max(0, n - k), min(size, n + k)
        elif placement == "uniform":
            lo, hi = 0, size
        else:
            raise ValueError(f"unknown placement {placement}")
        pos = int(rng.integers(lo, max(lo + 1, hi)))
        if kind == "insert":
            bit = int(rng.integers(0, 2))
            bits.insert(pos, bit)
        elif kind == "delete":
            pos = min(pos, len(bits) - 1)
            bit = 0
            del bits[pos]
        else:
            pos = min(pos, len(bits) - 1)
            bit = 1 - bits[pos]
            bits[pos] = bit
        ops.append(EditOp(kind=kind, pos=pos, bit=bit))
    return np.asarray(bits, dtype=np.uint8), EditScript(ops=ops)


def theory_bits_optimal(n: int, k: int) -> float:
    """k log2(n / k), the randomized summary size up to constants"""
    return k * math.log2(max(2.0, n / k))


def theory_bits_deterministic(n: int, k: int) -> float:
    """k log2^2(n / k), the deterministic summary size up to constants"""
    return k * math.log2(max(2.0, n / k)) ** 2


def fitted_constant(rows: Iterable[BenchRow]) -> Optional[float]:
    """Largest summary_bits / theoretical size over the rows."""
    ratios = []
    for row in rows:
        theory = theory_bits_deterministic if row.scheme in (Scheme.DETERMINISTIC, Scheme.ALG1_RANDOM) else theory_bits_optimal
        ratios.append(row.summary_bits / theory(row.n, row.k))
    return max(ratios) if ratios else None


def bench_summary_scaling(
    sizes: Sequence[Tuple[int, int]],
    scheme: Scheme,
    trials: int,
    seed: int = 0,
    threads: int = 1,
) -> List[BenchRow]:
    """
    Build and recover summaries over a grid of (n, k), one fresh file and mutation per trial.

    Rows are ordered by (n, k, trial index); the timing covers summary construction and
    recovery.
    """
    rows = []
    for n, k in sizes:
        params = derive_params(n, k, scheme)
        for trial in range(trials):
            trial_seed = seed + trial
            rng = np.random.default_rng([trial_seed, n, k])
            F = rng.integers(0, 256, size=(n + 7) // 8, dtype=np.uint8).tobytes()
            Fp, _ = mutate(F, k, rng)
            started = time.perf_counter()
            entropy = rng.bytes(entropy_size(params)) if scheme != Scheme.DETERMINISTIC else None
            summary = build_summary(F, params, entropy=entropy, threads=threads)
            try:
                recovered, _ = reconstruct(summary, Fp)
                success = recovered == F
            except ExchangeError as e:
                logger.debug(f"bench trial n={n} k={k} seed={trial_seed} failed: {e}")
                success = False
            micros = int((time.perf_counter() - started) * 1e6)
            row = BenchRow(
                n=n,
                k=k,
                scheme=scheme,
                seed=trial_seed,
                summary_bits=8 * len(serialize(summary)),
                success=success,
                micros=micros,
            )
            rows.append(row)
            audit_logger.log(
                action="bench_row",
                resource_type="bench",
                resource_id=scheme.value,
                status="success" if success else "failure",
                details=row.model_dump(mode="json")
            )
    return rows


def write_csv(rows: Iterable[BenchRow], out: IO[str]) -> None:
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        record = row.model_dump(mode="json")
        record["success"] = int(row.success)
        writer.writerow(record)
