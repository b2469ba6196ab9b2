"""
DXS1 binary format for summaries.

Layout (little-endian): magic "DXS1", version u16, scheme u8, n u64, k u32, o u8, L u8,
w u8, poly u32, the constants the sender built with (bias constant c, verify multiplier,
color hash width, final check width, one u8 each), total size u32, seed section (lane
count u16, then per lane width u16 and ceil(width / 8) value bytes), level-0 digests
bit-packed, L payloads each prefixed by a u32 length (empty past the identity level),
the final check prefixed by a u32 length, CRC32 of everything before.
"""
import struct
import zlib
from typing import List, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import BadMagic, ChecksumMismatch, LengthMismatch, ParameterError, Truncation, VersionMismatch
from app.models.params import Scheme, derive_params
from app.models.seed import BiasSeed, LaneSeed
from app.models.summary import SUMMARY_MAGIC, SUMMARY_VERSION, Summary, SummaryReport
from app.services.sketch.smallbias import shared_lane_degree
from app.utils.bits import bits_to_bytes, bytes_to_bits, ints_to_rows, rows_to_ints

_HEADER = struct.Struct("<4sHBQIBBBIBBBBI")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_CRC_BYTES = 4


def _seed_bytes(seed: BiasSeed) -> bytes:
    out = [_U16.pack(len(seed.lanes))]
    for lane in seed.lanes:
        out.append(_U16.pack(lane.width))
        out.append(lane.value.to_bytes((lane.width + 7) // 8, "little"))
    return b"".join(out)


def _level0_bytes(level0: List[int], o: int) -> bytes:
    return bits_to_bytes(ints_to_rows(np.asarray(level0, dtype=np.int64), o).reshape(-1))


def _sections(s: Summary) -> Tuple[bytes, bytes, List[bytes], bytes]:
    seed = _seed_bytes(s.seed)
    level0 = _level0_bytes(s.level0, s.o)
    payloads = [_U32.pack(len(p)) + p for p in s.payloads]
    final = _U32.pack(len(s.final_check)) + s.final_check
    return seed, level0, payloads, final


def serialize(s: Summary) -> bytes:
    """Encode a summary as DXS1 bytes."""
    if len(s.payloads) != s.L:
        raise ParameterError(f"summary has {len(s.payloads)} payloads for L={s.L}")
    seed, level0, payloads, final = _sections(s)
    total = _HEADER.size + len(seed) + len(level0) + sum(len(p) for p in payloads) + len(final) + _CRC_BYTES
    header = _HEADER.pack(
        SUMMARY_MAGIC, s.version, s.scheme.code, s.n, s.k, s.o, s.L, s.w, s.poly,
        s.c, s.verify_multiplier, s.color_hash_bits, s.final_check_bits, total
    )
    body = header + seed + level0 + b"".join(payloads) + final
    return body + _U32.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes, start: int, end: int):
        self.data = data
        self.pos = start
        self.end = end

    def take(self, size: int) -> bytes:
        if self.pos + size > self.end:
            raise Truncation(f"section needs {size} bytes at offset {self.pos}, {self.end - self.pos} left")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]


def _check_prefix(data: bytes) -> None:
    if len(data) < len(SUMMARY_MAGIC):
        raise Truncation(f"{len(data)} bytes cannot hold the magic")
    if data[:4] != SUMMARY_MAGIC:
        raise BadMagic(f"expected magic {SUMMARY_MAGIC!r}, found {data[:4]!r}")
    if len(data) < 6:
        raise Truncation("missing version field")
    version = _U16.unpack(data[4:6])[0]
    if version != SUMMARY_VERSION:
        raise VersionMismatch(f"format version {version}, supported {SUMMARY_VERSION}")
    if len(data) < _HEADER.size:
        raise Truncation(f"{len(data)} bytes cannot hold the {_HEADER.size}-byte header")


def _check_envelope(data: bytes) -> Tuple:
    _check_prefix(data)
    fields = _HEADER.unpack(data[:_HEADER.size])
    total = fields[-1]
    if len(data) < total:
        raise Truncation(f"header declares {total} bytes, got {len(data)}")
    if len(data) > total:
        raise LengthMismatch(f"header declares {total} bytes, got {len(data)}")
    crc = _U32.unpack(data[total - _CRC_BYTES:total])[0]
    if zlib.crc32(data[:total - _CRC_BYTES]) != crc:
        raise ChecksumMismatch("CRC32 of the summary does not match")
    return fields


def deserialize(data: bytes) -> Summary:
    """Decode DXS1 bytes; every malformation raises a FormatError subclass."""
    (_, version, scheme_code, n, k, o, L, w, poly,
     c, verify_multiplier, color_hash_bits, final_check_bits, total) = _check_envelope(data)
    try:
        scheme = Scheme.from_code(scheme_code)
        params = derive_params(
            n, k, scheme, o=o, c=c, verify_multiplier=verify_multiplier,
            color_hash_bits=color_hash_bits, final_check_bits=final_check_bits,
        )
    except ParameterError as e:
        raise LengthMismatch(f"header fields are inconsistent: {e}") from e
    if params.L != L:
        raise LengthMismatch(f"header declares L={L} but n, k imply L={params.L}")

    reader = _Reader(data, _HEADER.size, total - _CRC_BYTES)
    lanes = []
    for _ in range(reader.u16()):
        width = reader.u16()
        value = int.from_bytes(reader.take((width + 7) // 8), "little")
        if value >> width:
            raise LengthMismatch(f"lane value exceeds its {width}-bit width")
        lanes.append(LaneSeed(width=width, value=value))
    seed = BiasSeed(lanes=lanes, bias_exponent=params.bias_exponent)

    count = params.block_count(0)
    packed = reader.take((count * o + 7) // 8)
    level0 = rows_to_ints(bytes_to_bits(packed)[:count * o].reshape(count, o))

    payloads = [reader.take(reader.u32()) for _ in range(L)]
    final_check = reader.take(reader.u32())
    if reader.pos != reader.end:
        raise LengthMismatch(f"{reader.end - reader.pos} unexplained bytes before the checksum")

    return Summary(
        version=version,
        scheme=scheme,
        n=n,
        k=k,
        o=o,
        L=L,
        w=w,
        poly=poly,
        c=c,
        verify_multiplier=verify_multiplier,
        color_hash_bits=color_hash_bits,
        final_check_bits=final_check_bits,
        seed=seed,
        level0=[int(d) for d in level0],
        payloads=payloads,
        final_check=final_check,
    )


def inspect_summary(data: bytes) -> Tuple[Summary, SummaryReport]:
    """
    Decode DXS1 bytes and account for every section.

    Deterministic summaries also report whether their shared lane was clamped below the
    width the bias target asks for, to keep the seed space enumerable.

    The report satisfies header + seed + level0 + sum(payloads) + final check + crc
    = total bytes.
    """
    s = deserialize(data)
    seed, level0, payloads, final = _sections(s)
    lane_widths = [lane.width for lane in s.seed.lanes]
    cap_bits, clamped = None, False
    if s.scheme == Scheme.DETERMINISTIC:
        wanted, _ = shared_lane_degree(s.params())
        cap_bits = settings.ENUMERATION_CAP_BITS
        clamped = lane_widths[0] < 2 * wanted
    report = SummaryReport(
        scheme=s.scheme,
        n=s.n,
        k=s.k,
        o=s.o,
        L=s.L,
        w=s.w,
        c=s.c,
        verify_multiplier=s.verify_multiplier,
        color_hash_bits=s.color_hash_bits,
        final_check_bits=s.final_check_bits,
        header_bytes=_HEADER.size,
        seed_bytes=len(seed),
        level0_bytes=len(level0),
        payload_bytes=[len(p) for p in payloads],
        final_check_bytes=len(final),
        crc_bytes=_CRC_BYTES,
        total_bytes=len(data),
        lane_widths=lane_widths,
        enumeration_cap_bits=cap_bits,
        lane_clamped=clamped,
    )
    return s, report


def declared_size(data: bytes) -> int:
    """Total byte length a DXS1 header announces, for cutting a padded stream."""
    _check_prefix(data)
    return _HEADER.unpack(data[:_HEADER.size])[-1]
