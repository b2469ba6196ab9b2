"""
GF(2^w) fields and a systematic Reed-Solomon code, backed by galois.

Every field is galois' default GF(2^w): the Conway polynomial where one is tabulated,
otherwise the lexicographically first primitive polynomial. The polynomial is recorded
in summaries so both sides can confirm they work in the same field. Codewords are the
k_code message symbols followed by r_code parity symbols.
"""
from functools import lru_cache
from typing import Type

import galois
import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.core.errors import DecodeFailure, FieldMismatch, ParameterError

RS_SYMBOL_WIDTHS = (8, 12, 16)


@lru_cache(maxsize=None)
def get_field(w: int) -> Type[galois.FieldArray]:
    """The field class for GF(2^w), 1 <= w <= 64."""
    if not 1 <= w <= 64:
        raise ParameterError(f"field degree {w} outside [1, 64]")
    return galois.GF(2 ** w)


def field_polynomial(w: int) -> int:
    """Integer form of the irreducible polynomial of GF(2^w) (bit i = coefficient of x^i)."""
    return int(get_field(w).irreducible_poly)


def plain(values: galois.FieldArray) -> np.ndarray:
    """Drop the field class; object-dtype fields keep Python ints."""
    return values.view(np.ndarray)


class FieldElem(BaseModel):
    """An element of GF(2^w)"""
    model_config = ConfigDict(frozen=True)

    value: int
    w: int

    @model_validator(mode="after")
    def check_range(self):
        if not 0 <= self.value < (1 << self.w):
            raise ParameterError(f"value {self.value} does not fit in {self.w} bits")
        return self


def gf_mul(a: FieldElem, b: FieldElem) -> FieldElem:
    if a.w != b.w:
        raise FieldMismatch(f"GF(2^{a.w}) element multiplied by GF(2^{b.w}) element")
    GF = get_field(a.w)
    return FieldElem(value=int(GF(a.value) * GF(b.value)), w=a.w)


class RsCode(BaseModel):
    """Systematic [n_code, k_code] Reed-Solomon code over GF(2^w)"""
    model_config = ConfigDict(frozen=True)

    n_code: int
    k_code: int
    w: int

    @property
    def r_code(self) -> int:
        return self.n_code - self.k_code

    @model_validator(mode="after")
    def check_length(self):
        if self.k_code < 1 or self.r_code < 0:
            raise ParameterError("RS code needs k_code >= 1 and n_code >= k_code")
        if self.n_code > (1 << self.w) - 1:
            raise ParameterError(f"RS length {self.n_code} exceeds 2^{self.w} - 1")
        return self


@lru_cache(maxsize=64)
def _reed_solomon(n_code: int, k_code: int, w: int) -> galois.ReedSolomon:
    return galois.ReedSolomon(n_code, k_code, field=get_field(w))


def _as_symbols(values, code: RsCode, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= (1 << code.w)):
        raise ParameterError(f"{what} contains symbols outside GF(2^{code.w})")
    return arr


def rs_encode_redundancy(message, code: RsCode) -> np.ndarray:
    """
    Parity symbols making (message || parity) a codeword.

    Args:
        message: k_code symbols
        code: The RS code

    Returns:
        r_code parity symbols
    """
    message = _as_symbols(message, code, "message")
    if message.size != code.k_code:
        raise ParameterError(f"message has {message.size} symbols, code expects {code.k_code}")
    if code.r_code == 0:
        return np.zeros(0, dtype=np.int64)
    rs = _reed_solomon(code.n_code, code.k_code, code.w)
    codeword = rs.encode(get_field(code.w)(message))
    return plain(codeword[code.k_code:]).astype(np.int64)


def rs_decode(received_message, parity, code: RsCode) -> np.ndarray:
    """
    Errors-only decoding of (received_message || parity) up to floor(r_code / 2) errors.

    Args:
        received_message: k_code symbols, gaps already filled with a sentinel
        parity: r_code symbols from the summary
        code: The RS code

    Returns:
        The corrected k_code message symbols
    """
    received_message = _as_symbols(received_message, code, "received message")
    parity = _as_symbols(parity, code, "parity")
    if received_message.size != code.k_code or parity.size != code.r_code:
        raise ParameterError("received word length does not match the code")
    if code.r_code == 0:
        return received_message.copy()
    GF = get_field(code.w)
    rs = _reed_solomon(code.n_code, code.k_code, code.w)
    received = GF(np.concatenate([received_message, parity]))
    message, corrected = rs.decode(received, errors=True)
    if corrected < 0:
        raise DecodeFailure(f"more than {code.r_code // 2} symbol errors")
    return plain(message).astype(np.int64)
