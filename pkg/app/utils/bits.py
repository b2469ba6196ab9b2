"""Conversions between byte strings and numpy bit arrays.

Bit order is little-endian within each byte throughout the package, matching the
digest layout (bit i of a digest is its i-th output bit).
"""
from typing import Iterable

import numpy as np


def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")


def bits_to_bytes(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def pad_bits(bits: np.ndarray, length: int) -> np.ndarray:
    """Zero-pad (never truncate) a bit array to `length`."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size >= length:
        return bits
    return np.concatenate([bits, np.zeros(length - bits.size, dtype=np.uint8)])


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits: Iterable[int]) -> int:
    value = 0
    for i, b in enumerate(bits):
        if b:
            value |= 1 << i
    return value


def rows_to_ints(rows: np.ndarray) -> np.ndarray:
    """Pack each row of a (count, width<=63) bit matrix into an int64 value."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.shape[1] == 0:
        return np.zeros(rows.shape[0], dtype=np.int64)
    weights = np.left_shift(np.int64(1), np.arange(rows.shape[1], dtype=np.int64))
    return rows @ weights


def ints_to_rows(values: np.ndarray, width: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width, dtype=np.int64)
    return ((values[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
