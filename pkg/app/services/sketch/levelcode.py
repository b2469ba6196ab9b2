"""
Reed-Solomon protection of per-level digest vectors.

Digests are mapped onto GF(2^w) symbols in one of two ways:
  - o <= w: g = floor(w / o) consecutive digests share a symbol (one interleave);
  - o > w: each digest is cut into ceil(o / w) slices, slice i of every digest goes to
    interleave i.
Either way a wrong digest corrupts at most one symbol per interleave, so each
interleave carries 13k redundancy symbols. Gaps (digest -1) become all-ones symbols.
"""
import math
from dataclasses import dataclass

import numpy as np

from app.core.errors import LengthMismatch
from app.models.params import Params
from app.services.coding.rsfield import RS_SYMBOL_WIDTHS, RsCode, rs_decode, rs_encode_redundancy
from app.services.coding.rsfield import field_polynomial as symbol_field_polynomial

GAP = -1
REDUNDANCY_FACTOR = 13


@dataclass(frozen=True)
class LevelCodeLayout:
    o: int
    w: int
    k: int

    @property
    def per_symbol(self) -> int:
        return max(1, self.w // self.o)

    @property
    def interleaves(self) -> int:
        return math.ceil(self.o / self.w) if self.o > self.w else 1

    @property
    def redundancy(self) -> int:
        return REDUNDANCY_FACTOR * self.k

    def message_symbols(self, digest_count: int) -> int:
        return math.ceil(digest_count / self.per_symbol)

    def code(self, digest_count: int) -> RsCode:
        k_code = self.message_symbols(digest_count)
        return RsCode(n_code=k_code + self.redundancy, k_code=k_code, w=self.w)

    def payload_bytes(self) -> int:
        return math.ceil(self.interleaves * self.redundancy * self.w / 8)


def choose_layout(params: Params) -> LevelCodeLayout:
    """Smallest symbol width whose code length covers the identity level, the deepest one encoded."""
    widest = params.block_count(params.identity_level())
    for w in RS_SYMBOL_WIDTHS:
        layout = LevelCodeLayout(o=params.o, w=w, k=params.k)
        if layout.message_symbols(widest) + layout.redundancy <= (1 << w) - 1:
            return layout
    raise LengthMismatch(
        f"n={params.n} is too long for 16-bit Reed-Solomon symbols at k={params.k}; lower n or raise k"
    )


def digests_to_symbols(digests: np.ndarray, layout: LevelCodeLayout) -> np.ndarray:
    """(interleaves, message symbols) array; gaps become all-ones."""
    digests = np.asarray(digests, dtype=np.int64)
    gaps = digests == GAP
    full = (1 << layout.w) - 1
    if layout.o <= layout.w:
        g = layout.per_symbol
        count = layout.message_symbols(digests.size)
        slots = np.zeros(count * g, dtype=np.int64)
        slots[:digests.size] = np.where(gaps, (1 << layout.o) - 1, digests)
        shifts = np.arange(g, dtype=np.int64) * layout.o
        symbols = np.bitwise_or.reduce(slots.reshape(count, g) << shifts, axis=1)
        return symbols[None, :]
    rows = []
    for i in range(layout.interleaves):
        part = (digests >> (i * layout.w)) & full
        rows.append(np.where(gaps, full, part))
    return np.stack(rows)


def symbols_to_digests(symbols: np.ndarray, layout: LevelCodeLayout, count: int) -> np.ndarray:
    o_mask = (1 << layout.o) - 1
    if layout.o <= layout.w:
        g = layout.per_symbol
        shifts = np.arange(g, dtype=np.int64) * layout.o
        slots = (symbols[0][:, None] >> shifts[None, :]) & o_mask
        return slots.reshape(-1)[:count]
    digests = np.zeros(count, dtype=np.int64)
    for i in range(layout.interleaves):
        digests |= symbols[i][:count] << (i * layout.w)
    return digests & o_mask


def pack_symbols(symbols: np.ndarray, w: int) -> bytes:
    flat = np.asarray(symbols, dtype=np.int64).reshape(-1)
    bits = ((flat[:, None] >> np.arange(w, dtype=np.int64)) & 1).astype(np.uint8)
    return np.packbits(bits.reshape(-1), bitorder="little").tobytes()


def unpack_symbols(data: bytes, w: int, count: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bits.size < count * w:
        raise LengthMismatch(f"payload holds {bits.size} bits, need {count * w}")
    rows = bits[:count * w].reshape(count, w).astype(np.int64)
    return rows @ (np.int64(1) << np.arange(w, dtype=np.int64))


def encode_level(digests: np.ndarray, layout: LevelCodeLayout) -> bytes:
    """Redundancy of every interleave, concatenated and bit-packed."""
    code = layout.code(len(digests))
    symbols = digests_to_symbols(digests, layout)
    parity = [rs_encode_redundancy(row, code) for row in symbols]
    return pack_symbols(np.concatenate(parity), layout.w)


def decode_level(guess: np.ndarray, payload: bytes, layout: LevelCodeLayout) -> np.ndarray:
    """Correct a guessed digest vector (gaps allowed) against the level payload."""
    code = layout.code(len(guess))
    parity = unpack_symbols(payload, layout.w, layout.interleaves * code.r_code)
    parity = parity.reshape(layout.interleaves, code.r_code)
    symbols = digests_to_symbols(guess, layout)
    decoded = np.stack([rs_decode(row, par, code) for row, par in zip(symbols, parity)])
    return symbols_to_digests(decoded, layout, len(guess))


def field_polynomial(layout: LevelCodeLayout) -> int:
    return symbol_field_polynomial(layout.w)
