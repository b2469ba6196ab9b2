"""
Inner-product hashing of bit strings against the randomness table.

Digest bit i of a block S starting at table position s on level l is
XOR_j S[j] AND R[s + j, l, i]. Blocks no longer than the digest width are returned
verbatim, zero-padded. Digests are packed into int64 values with bit i = output bit i.
"""
from dataclasses import dataclass

import numpy as np

from app.core.errors import ParameterError
from app.models.params import Params
from app.services.sketch.smallbias import RandTable
from app.utils.bits import ints_to_rows, pad_bits, rows_to_ints

INVALID_WINDOW = -2


@dataclass(frozen=True)
class HashVector:
    """H[level, .]: one o-bit digest per level block"""
    level: int
    digests: np.ndarray  # int64, length 4k * 2^level
    o: int

    def __len__(self) -> int:
        return int(self.digests.size)

    def bits(self) -> np.ndarray:
        return ints_to_rows(self.digests, self.o).reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HashVector):
            return NotImplemented
        return (self.level, self.o) == (other.level, other.o) and np.array_equal(self.digests, other.digests)


def hash_block(bits, s: int, level: int, table: RandTable, o: int) -> int:
    """
    Digest of one bit string placed at table position s.

    Args:
        bits: The block bits
        s: Start position in the padded file coordinates
        level: Table level
        table: Randomness table
        o: Output width

    Returns:
        The packed digest
    """
    bits = np.asarray(bits, dtype=np.int64)
    n_pad = table.params.n_pad
    if s < 0 or s + bits.size > n_pad:
        raise ParameterError(f"block [{s}, {s + bits.size}) outside [0, {n_pad})")
    if bits.size <= o:
        return int(rows_to_ints(pad_bits(bits, o)[None, :o])[0])
    rows = table.hash_rows(level)[s:s + bits.size, :o].astype(np.int64)
    return int(rows_to_ints(((bits @ rows) & 1)[None, :])[0])


def block_window_digests(
    source: np.ndarray,
    block_ids: np.ndarray,
    window_starts: np.ndarray,
    level: int,
    table: RandTable,
    params: Params,
) -> np.ndarray:
    """
    Digests of source windows, each hashed at the coordinates of a level block.

    Window v is source[window_starts[v] : window_starts[v] + block_len] hashed as if it
    sat at block block_ids[v]. Windows running off either end yield INVALID_WINDOW.
    """
    length = params.block_len(level)
    block_ids = np.asarray(block_ids, dtype=np.int64)
    window_starts = np.asarray(window_starts, dtype=np.int64)
    out = np.full(block_ids.size, INVALID_WINDOW, dtype=np.int64)
    valid = (window_starts >= 0) & (window_starts + length <= source.size)
    if not valid.any():
        return out
    offsets = np.arange(length, dtype=np.int64)
    windows = source[window_starts[valid][:, None] + offsets].astype(np.int32)
    if length <= params.o:
        out[valid] = rows_to_ints(windows)
        return out
    masks = table.hash_rows(level).reshape(params.block_count(level), length, params.o)
    digest_bits = np.einsum("vl,vlo->vo", windows, masks[block_ids[valid]].astype(np.int32)) & 1
    out[valid] = rows_to_ints(digest_bits)
    return out


def hash_level(F_padded: np.ndarray, level: int, table: RandTable, params: Params) -> HashVector:
    """Cut the padded file into 4k * 2^level blocks and hash each at its own position."""
    if not 0 <= level <= params.L:
        raise ParameterError(f"level {level} outside [0, {params.L}]")
    if F_padded.size != params.n_pad:
        raise ParameterError(f"padded file has {F_padded.size} bits, expected {params.n_pad}")
    blocks = np.arange(params.block_count(level), dtype=np.int64)
    digests = block_window_digests(F_padded, blocks, blocks * params.block_len(level), level, table, params)
    return HashVector(level=level, digests=digests, o=params.o)


def hash_string_of_hashes(
    bits: np.ndarray,
    width: int,
    table: RandTable,
    level: int,
    column: int = 0,
) -> np.ndarray:
    """
    Verification hash of a digest string, taken from the level's verify segment.

    Args:
        bits: Concatenated digest bits (or any bit string at most the segment height)
        width: Output bits
        table: Randomness table with a verify segment for `level`
        level: Level whose verification lane is used
        column: First segment column, so that disjoint column ranges give independent hashes

    Returns:
        `width` output bits
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size <= width:
        return pad_bits(bits.astype(np.uint8), width)
    segment = table.segment("verify", level)
    if bits.size > segment.shape[0] or column + width > segment.shape[1]:
        raise ParameterError("verification input exceeds the verify segment")
    matrix = segment[:bits.size, column:column + width].astype(np.int64)
    return ((bits @ matrix) & 1).astype(np.uint8)


def verification_matrix(table: RandTable, level: int, rows: int, width: int, column: int = 0) -> np.ndarray:
    """The GF(2) matrix behind hash_string_of_hashes; identity when input fits in width."""
    if rows <= width:
        return np.eye(rows, width, dtype=np.uint8)
    return table.segment("verify", level)[:rows, column:column + width]


def final_check_hash(F_padded: np.ndarray, table: RandTable) -> np.ndarray:
    """Whole-file check bits from the independent final lane."""
    segment = table.segment("final", 0)
    width = segment.shape[1]
    bits = np.asarray(F_padded, dtype=np.int64)
    if bits.size <= width:
        return pad_bits(bits.astype(np.uint8), width)
    return ((bits @ segment[:bits.size].astype(np.int64)) & 1).astype(np.uint8)
