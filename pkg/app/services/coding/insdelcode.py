"""
Systematic code for k insertions/deletions: the codeword is X itself followed by an
insdel-protected deterministic summary of X computed for edit budget 2k.

k edits anywhere in the codeword leave the first n bits within 2k edits of X and the
tail within 2k indels (plus the split shift) of the protected summary, so the inner code
is run with radius d = 2k and the summary is built for budget 2k.
"""
import struct
from abc import ABC, abstractmethod
from typing import Dict, Tuple, Type

import numpy as np
from loguru import logger

from app.core.errors import (
    BadMagic,
    ExchangeError,
    FormatError,
    InnerDecodeFailure,
    LengthMismatch,
    ParameterError,
    RecoveryFailure,
    Truncation,
)
from app.models.params import Scheme, derive_params
from app.models.summary import CODEWORD_MAGIC, Codeword
from app.services.recovery.recovery import recover_alg1
from app.services.sketch.codec import declared_size, deserialize, serialize
from app.services.sketch.summary import BitSource, as_bits, build_summary_deterministic
from app.utils.audit_logger import audit_logger
from app.utils.bits import bits_to_bytes, bytes_to_bits, pad_bits

_CODEWORD_HEADER = struct.Struct("<4sQIBQ")


class InnerInsdelCode(ABC):
    """Bit-string code correcting up to `radius` insertions and deletions"""
    code_id: int = 0

    def __init__(self, radius: int):
        if radius < 0:
            raise ParameterError("inner code radius must be non-negative")
        self.radius = radius

    @abstractmethod
    def encode(self, payload: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def decode(self, received: np.ndarray) -> np.ndarray:
        pass


class RepetitionInsdelCode(InnerInsdelCode):
    """
    Every payload bit repeated R = 2d + 1 times.

    Decoding returns the codeword at minimum insertion/deletion distance: aligning the
    received string against P runs, a run of R copies of bit b matched against a
    received segment of length m with c copies of b costs R + m - 2 min(R, c). Segment
    boundaries stay within d of their nominal positions, so the alignment is a banded
    DP. Codewords of equal length are at least 2R > 2d apart, so any d indels decode
    correctly; P itself is recovered as round(|received| / R).
    """
    code_id = 1

    @property
    def repeat(self) -> int:
        return 2 * self.radius + 1

    def encode(self, payload: np.ndarray) -> np.ndarray:
        return np.repeat(np.asarray(payload, dtype=np.uint8), self.repeat)

    def decode(self, received: np.ndarray) -> np.ndarray:
        received = np.asarray(received, dtype=np.uint8)
        R, d = self.repeat, self.radius
        P = int(round(received.size / R))
        if P == 0:
            return np.zeros(0, dtype=np.uint8)
        if abs(received.size - P * R) > d:
            raise InnerDecodeFailure(f"{received.size} bits is no repetition codeword within {d} indels")

        ones = np.concatenate([[0], np.cumsum(received, dtype=np.int64)])
        band = np.arange(-d, d + 1, dtype=np.int64)
        inf = np.iinfo(np.int64).max // 4

        def positions(p: int) -> np.ndarray:
            pos = p * R + band
            return np.where((pos >= 0) & (pos <= received.size), pos, -1)

        cost = np.where(positions(0) == 0, 0, inf)
        choices = np.zeros((P, band.size), dtype=np.int64)
        bits = np.zeros((P, band.size), dtype=np.uint8)
        prev = positions(0)
        for p in range(1, P + 1):
            cur = positions(p)
            a, b = prev[:, None], cur[None, :]
            length = b - a
            count1 = ones[np.clip(b, 0, None)] - ones[np.clip(a, 0, None)]
            count0 = length - count1
            best = np.maximum(count1, count0)
            seg = R + length - 2 * np.minimum(R, best)
            valid = (a >= 0) & (b >= 0) & (length >= 0) & (cost[:, None] < inf)
            total = np.where(valid, cost[:, None] + seg, inf)
            choices[p - 1] = np.argmin(total, axis=0)
            pick = choices[p - 1]
            bits[p - 1] = (count1[pick, np.arange(band.size)] > count0[pick, np.arange(band.size)]).astype(np.uint8)
            cost = total[pick, np.arange(band.size)]
            prev = cur

        end = np.nonzero(positions(P) == received.size)[0]
        if end.size == 0 or cost[end[0]] >= inf:
            raise InnerDecodeFailure("no alignment of the redundancy within the band")
        distance = int(cost[end[0]])
        if distance > d:
            logger.debug(f"inner decode at indel distance {distance} exceeds radius {d}")

        payload = np.zeros(P, dtype=np.uint8)
        column = int(end[0])
        for p in range(P, 0, -1):
            payload[p - 1] = bits[p - 1, column]
            column = int(choices[p - 1, column])
        return payload


INNER_CODES: Dict[int, Type[InnerInsdelCode]] = {RepetitionInsdelCode.code_id: RepetitionInsdelCode}


def default_inner_code(k: int) -> InnerInsdelCode:
    return RepetitionInsdelCode(radius=2 * k)


def _inner_code(code_id: int, k: int) -> InnerInsdelCode:
    if code_id not in INNER_CODES:
        raise FormatError(f"unknown inner code id {code_id}")
    return INNER_CODES[code_id](radius=2 * k)


def encode(X: bytes, k: int, threads: int = 1) -> Codeword:
    """
    Systematic codeword of X protecting against k insertions/deletions.

    Args:
        X: The message
        k: Edit budget
        threads: Workers for the deterministic seed search

    Returns:
        Codeword whose first 8 |X| bits are X
    """
    n = 8 * len(X)
    params = derive_params(n, 2 * k, Scheme.DETERMINISTIC)
    summary = build_summary_deterministic(X, params, threads)
    payload = bytes_to_bits(serialize(summary))
    payload = pad_bits(payload, max(payload.size, k))
    inner = default_inner_code(k)
    redundancy = inner.encode(payload)

    audit_logger.log(
        action="codeword_encoded",
        resource_type="codeword",
        resource_id=f"inner-{inner.code_id}",
        status="success",
        details={"n": n, "k": k, "summary_bits": int(payload.size), "redundancy_bits": int(redundancy.size)}
    )
    return Codeword(
        n=n,
        k=k,
        inner_code=inner.code_id,
        systematic=X,
        redundancy=bits_to_bytes(redundancy),
        redundancy_bits=int(redundancy.size),
    )


def codeword_bits(c: Codeword) -> np.ndarray:
    return np.concatenate([bytes_to_bits(c.systematic)[:c.n], bytes_to_bits(c.redundancy)[:c.redundancy_bits]])


def decode(Cp: BitSource, n: int, k: int, inner_code: int = RepetitionInsdelCode.code_id) -> bytes:
    """
    Recover X from a codeword corrupted by at most k edits.

    Args:
        Cp: Received codeword bits
        n: Message length in bits
        k: Edit budget the codeword was built for
        inner_code: Inner code id

    Returns:
        X as bytes
    """
    bits = as_bits(Cp)
    inner = _inner_code(inner_code, k)
    X_received, E_received = bits[:n], bits[n:]
    try:
        payload = bits_to_bytes(inner.decode(E_received))
        summary = deserialize(payload[:declared_size(payload)])
    except (FormatError, InnerDecodeFailure) as e:
        audit_logger.log(
            action="codeword_decoded",
            resource_type="codeword",
            status="failure",
            details={"n": n, "k": k, "stage": "inner", "error": str(e)}
        )
        if isinstance(e, InnerDecodeFailure):
            raise
        raise InnerDecodeFailure(f"redundancy decoded to an unreadable summary: {e}") from e
    if summary.n != n or summary.k != 2 * k:
        raise InnerDecodeFailure(f"summary describes n={summary.n}, k={summary.k}; expected n={n}, k={2 * k}")

    try:
        X = recover_alg1(summary, X_received)
    except ExchangeError as e:
        audit_logger.log(
            action="codeword_decoded",
            resource_type="codeword",
            status="failure",
            details={"n": n, "k": k, "stage": "recovery", "error": str(e)}
        )
        raise RecoveryFailure(f"message recovery failed: {e}") from e

    audit_logger.log(
        action="codeword_decoded",
        resource_type="codeword",
        status="success",
        details={"n": n, "k": k, "received_bits": int(bits.size)}
    )
    return X


def serialize_codeword(n: int, k: int, inner_code: int, bits: np.ndarray) -> bytes:
    """DXC1 bytes: magic, n u64, k u32, inner id u8, body bit count u64, packed body bits."""
    bits = np.asarray(bits, dtype=np.uint8)
    return _CODEWORD_HEADER.pack(CODEWORD_MAGIC, n, k, inner_code, bits.size) + bits_to_bytes(bits)


def parse_codeword(data: bytes) -> Tuple[int, int, int, np.ndarray]:
    """
    Read DXC1 bytes.

    Returns:
        (n, k, inner code id, codeword bits)
    """
    if len(data) < 4:
        raise Truncation("codeword too short for its magic")
    if data[:4] != CODEWORD_MAGIC:
        raise BadMagic(f"expected magic {CODEWORD_MAGIC!r}, found {data[:4]!r}")
    if len(data) < _CODEWORD_HEADER.size:
        raise Truncation(f"{len(data)} bytes cannot hold the {_CODEWORD_HEADER.size}-byte header")
    _, n, k, inner_code, body_bits = _CODEWORD_HEADER.unpack(data[:_CODEWORD_HEADER.size])
    body = data[_CODEWORD_HEADER.size:]
    if len(body) < (body_bits + 7) // 8:
        raise Truncation(f"header declares {body_bits} body bits, got {8 * len(body)}")
    if len(body) > (body_bits + 7) // 8:
        raise LengthMismatch(f"header declares {body_bits} body bits, got {len(body)} bytes")
    return n, k, inner_code, bytes_to_bits(body)[:body_bits]
