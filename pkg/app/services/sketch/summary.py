"""
Summary construction for the three schemes.

Alg1/Det summaries protect the digest vector of every level down to the identity level
with Reed-Solomon redundancy; Alg2 summaries carry verification hashes of those vectors
instead, plus per-color-class hashes once k exceeds log2 n. Deeper levels are never read
by recovery and carry empty payloads.
"""
import hashlib
import secrets
from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import ParameterError, SeedSearchExhausted
from app.models.params import Params, Scheme
from app.models.seed import BiasSeed
from app.models.summary import Summary
from app.services.recovery.matchings import detect_k_bad_self_matching
from app.services.sketch.iphash import HashVector, final_check_hash, hash_level, hash_string_of_hashes
from app.services.sketch.levelcode import choose_layout, encode_level, field_polynomial
from app.services.sketch.smallbias import RandTable, enumerate_support, lane_plan, sample_seed
from app.utils.audit_logger import audit_logger
from app.utils.bits import bits_to_bytes, bytes_to_bits, pad_bits, rows_to_ints

BitSource = Union[bytes, np.ndarray]


def as_bits(data: BitSource) -> np.ndarray:
    """Byte strings become their little-endian bits; bit arrays pass through."""
    if isinstance(data, (bytes, bytearray)):
        return bytes_to_bits(bytes(data))
    return np.asarray(data, dtype=np.uint8)


def padded_file(F: BitSource, params: Params) -> np.ndarray:
    """The first n bits of F, zero-padded to n_pad."""
    bits = as_bits(F)
    if isinstance(F, (bytes, bytearray)):
        if len(F) != (params.n + 7) // 8:
            raise ParameterError(f"file has {len(F)} bytes but n={params.n} bits")
        bits = bits[:params.n]
    elif bits.size != params.n:
        raise ParameterError(f"file has {bits.size} bits but n={params.n}")
    return pad_bits(bits, params.n_pad)


def colors_for_level(table: RandTable, params: Params, level: int) -> np.ndarray:
    """Color class of every block of a level (all zeros when uncolored)."""
    if params.color_count <= 1:
        return np.zeros(params.block_count(level), dtype=np.int64)
    return rows_to_ints(table.segment("color", level)) % params.color_count


def color_mask(colors: np.ndarray, color: int, o: int) -> np.ndarray:
    """Digest-bit mask keeping only the blocks of one color class."""
    return np.repeat((colors == color).astype(np.uint8), o)


def verification_payload(H: HashVector, table: RandTable, params: Params) -> bytes:
    """Verification hash of the level's digest vector, then one hash per color class."""
    bits = H.bits()
    parts = [hash_string_of_hashes(bits, params.verify_width, table, H.level)]
    if params.color_count > 1:
        colors = colors_for_level(table, params, H.level)
        for color in range(params.color_count):
            column = params.verify_width + color * params.color_hash_bits
            masked = bits * color_mask(colors, color, params.o)
            parts.append(hash_string_of_hashes(masked, params.color_hash_bits, table, H.level, column))
    return bits_to_bytes(np.concatenate(parts))


def _assemble(F_padded: np.ndarray, params: Params, seed: BiasSeed, table: RandTable, threads: int) -> Summary:
    if params.scheme == Scheme.ALG2_OPTIMAL:
        w, poly = 0, 0

        def encode(H: HashVector) -> bytes:
            return verification_payload(H, table, params)
    else:
        layout = choose_layout(params)
        w, poly = layout.w, field_polynomial(layout)

        def encode(H: HashVector) -> bytes:
            return encode_level(H.digests, layout)

    def level_payload(level: int) -> Tuple[HashVector, bytes]:
        H = hash_level(F_padded, level, table, params)
        return H, encode(H) if level > 0 else b""

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(level_payload, range(params.identity_level() + 1)))
    payloads = [payload for _, payload in results[1:]]
    payloads += [b""] * (params.L - len(payloads))

    return Summary(
        scheme=params.scheme,
        n=params.n,
        k=params.k,
        o=params.o,
        L=params.L,
        w=w,
        poly=poly,
        c=params.c,
        verify_multiplier=params.verify_multiplier,
        color_hash_bits=params.color_hash_bits,
        final_check_bits=params.final_check_bits,
        seed=seed,
        level0=[int(d) for d in results[0][0].digests],
        payloads=payloads,
        final_check=bits_to_bytes(final_check_hash(F_padded, table)),
    )


def build_summary_randomized(
    F: BitSource,
    params: Params,
    entropy: bytes,
    threads: Optional[int] = None,
) -> Summary:
    """
    Build an Alg1 or Alg2 summary from a seed sampled out of the entropy bytes.

    Args:
        F: The file (bytes, or a bit array of length n)
        params: Scheme parameters, scheme alg1 or alg2
        entropy: Seed entropy, at least entropy_size(params) bytes
        threads: Worker count for per-level hashing

    Returns:
        The summary, a pure function of (F, params, entropy)
    """
    if params.scheme == Scheme.DETERMINISTIC:
        raise ParameterError("deterministic summaries come from build_summary_deterministic")
    threads = settings.THREADS if threads is None else threads
    F_padded = padded_file(F, params)
    seed = sample_seed(params, entropy)
    table = RandTable(seed, params)
    summary = _assemble(F_padded, params, seed, table, threads)

    audit_logger.summary_built(params, summary.w, seed.total_width)
    return summary


def _seed_is_good(F_padded: np.ndarray, params: Params, seed: BiasSeed) -> bool:
    table = RandTable(seed, params)
    for level in range(params.identity_level()):
        found, _ = detect_k_bad_self_matching(F_padded, level, params.k, table, params)
        if found:
            logger.debug(f"seed {seed.lanes[0].value:#x} rejected at level {level}")
            return False
    return True


def find_good_seed(F_padded: np.ndarray, params: Params, threads: int = 1) -> Tuple[BiasSeed, int]:
    """
    First seed in enumeration order under which no level has a k-bad self-matching.

    Candidates are tested in batches of `threads`; the lowest index in a batch wins,
    so the result does not depend on the worker count.

    Returns:
        (seed, enumeration index)
    """
    candidates = enumerate_support(params)
    index = 0
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        while True:
            batch: List[BiasSeed] = [
                BiasSeed(lanes=[lane], bias_exponent=params.bias_exponent)
                for lane in islice(candidates, max(1, threads))
            ]
            if not batch:
                break
            verdicts = list(pool.map(lambda seed: _seed_is_good(F_padded, params, seed), batch))
            for offset, good in enumerate(verdicts):
                if good:
                    return batch[offset], index + offset
            index += len(batch)
    raise SeedSearchExhausted(
        f"none of the {index} seeds avoids a {params.k}-bad self-matching; raise o or c"
    )


def build_summary_deterministic(
    F: BitSource,
    params: Params,
    threads: Optional[int] = None,
) -> Summary:
    """
    Build a Det summary whose seed is found by exhaustive search, with no entropy input.

    Args:
        F: The file (bytes, or a bit array of length n)
        params: Scheme parameters, scheme det
        threads: Workers for the seed search and level hashing

    Returns:
        The summary; repeated calls give identical results
    """
    if params.scheme != Scheme.DETERMINISTIC:
        raise ParameterError(f"scheme {params.scheme.value} is not deterministic")
    threads = settings.THREADS if threads is None else threads
    F_padded = padded_file(F, params)
    try:
        seed, index = find_good_seed(F_padded, params, threads)
    except SeedSearchExhausted as e:
        audit_logger.seed_search(params, None, lane_plan(params)[1][0], error=str(e))
        raise

    audit_logger.seed_search(params, index, seed.total_width)
    table = RandTable(seed, params)
    summary = _assemble(F_padded, params, seed, table, threads)

    audit_logger.summary_built(params, summary.w, seed.total_width)
    return summary


def build_summary(
    F: BitSource,
    params: Params,
    entropy: Optional[bytes] = None,
    threads: Optional[int] = None,
) -> Summary:
    """Dispatch on the scheme; randomized schemes require entropy."""
    if params.scheme == Scheme.DETERMINISTIC:
        return build_summary_deterministic(F, params, threads)
    if entropy is None:
        raise ParameterError(f"scheme {params.scheme.value} needs seed entropy")
    return build_summary_randomized(F, params, entropy, threads)


def expand_entropy(seed_hex: Optional[str], size: int) -> bytes:
    """
    Seed entropy for a randomized summary: OS randomness, or a reproducible SHAKE-256
    expansion of a hex seed.
    """
    if seed_hex is None:
        return secrets.token_bytes(size)
    try:
        seed = bytes.fromhex(seed_hex)
    except ValueError as e:
        raise ParameterError(f"seed {seed_hex!r} is not hexadecimal") from e
    return hashlib.shake_256(seed).digest(size)
