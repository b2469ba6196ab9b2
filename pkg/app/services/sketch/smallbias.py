"""
Small-bias randomness table built from the finite-field powering construction.

A lane seed (x, y) in GF(2^m)^2 yields the stream bit_j = <x, y^j> (inner product of
coefficient vectors). Any fixed nonempty parity over the first `length` bits has bias
at most length / 2^m, so m = ceil(log2(length) + bias_exponent) meets the target.
"""
import math
from typing import Dict, Iterator, List, Tuple

import numpy as np
from loguru import logger

from app.core.config import settings
from app.core.errors import EnumerationCapExceeded, InsufficientEntropy, ParameterError
from app.models.params import Params, Scheme
from app.models.seed import BiasSeed, LaneSeed, LaneSpec
from app.services.coding.rsfield import get_field, plain

_BLOCK = 4096
_PERM_MULTIPLIER = 0x9E3779B97F4A7C15
_PERM_OFFSET = 0x7F4A7C159E3779B9


def _segments(params: Params) -> List[Tuple[str, int, int, int]]:
    """
    (family, level, rows, cols) for every table segment the scheme reads.

    Blocks at and past the identity level hash to themselves, so hash segments stop
    just above it; verify and color segments stop at it.
    """
    top = params.identity_level()
    segments = [("hash", level, params.n_pad, params.o) for level in range(top)]
    if params.scheme == Scheme.ALG2_OPTIMAL:
        colors = params.color_count
        cols = params.verify_width + (colors * params.color_hash_bits if colors > 1 else 0)
        for level in range(top + 1):
            segments.append(("verify", level, params.block_count(level) * params.o, cols))
        if colors > 1:
            for level in range(top + 1):
                segments.append(("color", level, params.block_count(level), params.color_bits))
    segments.append(("final", 0, params.n_pad, params.final_check_bits))
    return segments


def lane_degree(length: int, bias_exponent: int) -> int:
    return max(1, min(64, math.ceil(math.log2(max(2, length)) + bias_exponent)))


def shared_lane_degree(params: Params) -> Tuple[int, int]:
    """(degree the bias target asks for, degree used) of the deterministic shared lane."""
    total = sum(rows * cols for _, _, rows, cols in _segments(params))
    wanted = lane_degree(total, params.bias_exponent)
    return wanted, max(1, min(wanted, settings.ENUMERATION_CAP_BITS // 2))


def lane_plan(params: Params) -> Tuple[List[LaneSpec], List[int]]:
    """
    Map every table segment onto lanes.

    Randomized schemes give each segment its own lane, so levels are independent. The
    deterministic scheme reads consecutive segments of one shared lane whose degree is
    limited so that the whole support stays enumerable.

    Returns:
        (segment specs, lane widths in bits)
    """
    segments = _segments(params)
    if params.scheme == Scheme.DETERMINISTIC:
        specs = []
        start = 0
        for family, level, rows, cols in segments:
            specs.append(LaneSpec(family=family, level=level, lane=0, start=start, rows=rows, cols=cols))
            start += rows * cols
        _, m = shared_lane_degree(params)
        return specs, [2 * m]

    specs = []
    widths = []
    for lane, (family, level, rows, cols) in enumerate(segments):
        specs.append(LaneSpec(family=family, level=level, lane=lane, start=0, rows=rows, cols=cols))
        widths.append(2 * lane_degree(rows * cols, params.bias_exponent))
    return specs, widths


def sample_seed(params: Params, entropy: bytes) -> BiasSeed:
    """
    Build a seed from raw entropy bytes.

    Args:
        params: Scheme parameters fixing lane count and widths
        entropy: Byte stream, consumed lane by lane, ceil(width / 8) bytes each

    Returns:
        BiasSeed, a pure function of the entropy bytes
    """
    _, widths = lane_plan(params)
    needed = entropy_size(params)
    if len(entropy) < needed:
        raise InsufficientEntropy(f"need {needed} entropy bytes, got {len(entropy)}")
    lanes = []
    offset = 0
    for width in widths:
        size = (width + 7) // 8
        value = int.from_bytes(entropy[offset:offset + size], "little") & ((1 << width) - 1)
        lanes.append(LaneSeed(width=width, value=value))
        offset += size
    return BiasSeed(lanes=lanes, bias_exponent=params.bias_exponent)


def enumerate_support(params: Params, lane: int = 0, cap_bits: int = None) -> Iterator[LaneSeed]:
    """
    Every seed value of one lane exactly once.

    Values are visited in the order v -> (v * odd + offset) mod 2^width, a bijection
    that moves the degenerate seeds (x = 0 or y = 0) away from the front.
    """
    cap_bits = settings.ENUMERATION_CAP_BITS if cap_bits is None else cap_bits
    _, widths = lane_plan(params)
    if not 0 <= lane < len(widths):
        raise ParameterError(f"lane {lane} does not exist")
    width = widths[lane]
    yield from enumerate_width(width, cap_bits)


def enumerate_width(width: int, cap_bits: int = None) -> Iterator[LaneSeed]:
    cap_bits = settings.ENUMERATION_CAP_BITS if cap_bits is None else cap_bits
    if width > cap_bits:
        raise EnumerationCapExceeded(
            f"seed width {width} exceeds the enumeration cap of {cap_bits} bits; "
            "shrink n or raise ENUMERATION_CAP_BITS"
        )
    mask = (1 << width) - 1
    for v in range(1 << width):
        yield LaneSeed(width=width, value=(v * _PERM_MULTIPLIER + _PERM_OFFSET) & mask)


def _coefficient_bits(values: np.ndarray, m: int) -> np.ndarray:
    """(len(values), m) 0/1 matrix of little-endian coefficient bits."""
    ints = np.array([int(v) for v in plain(values).reshape(-1)], dtype=np.uint64)
    return ((ints[:, None] >> np.arange(m, dtype=np.uint64)) & np.uint64(1)).astype(np.float64)


def _powers(GF, y, count: int):
    """y^0 .. y^(count-1) as one field array, by repeated doubling."""
    powers = GF([1])
    step = y
    while powers.size < count:
        powers = GF(np.concatenate([plain(powers), plain(powers * step)]))
        step = step * step
    return powers[:count]


def lane_stream(seed: LaneSeed, start: int, length: int) -> np.ndarray:
    """
    Bits start .. start+length-1 of the powering stream of one lane.

    Computed blockwise: bit (a*B + b) = <x, z_a * y^b> with z_a = y^(start + a*B);
    the functional v -> <x, z_a * v> is a row vector, so each block is one GF(2)
    matrix product against the coefficient bits of y^b.
    """
    m = seed.m
    if length <= 0:
        return np.zeros(0, dtype=np.uint8)
    if m == 0 or seed.x == 0:
        return np.zeros(length, dtype=np.uint8)
    if seed.y == 0:
        # y^0 = 1 and every later power is zero
        out = np.zeros(length, dtype=np.uint8)
        if start == 0:
            out[0] = seed.x & 1
        return out

    GF = get_field(m)
    y = GF(seed.y)
    xbits = np.array([(seed.x >> i) & 1 for i in range(m)], dtype=np.float64)
    basis = GF([1 << i for i in range(m)])

    block = min(_BLOCK, length)
    powers = _coefficient_bits(_powers(GF, y, block), m)
    step = y ** block

    blocks = (length + block - 1) // block
    rows = np.zeros((blocks, m), dtype=np.float64)
    z = y ** start
    for a in range(blocks):
        rows[a] = (_coefficient_bits(z * basis, m) @ xbits) % 2
        z = z * step

    bits = (rows @ powers.T).astype(np.int64) & 1
    return bits.reshape(-1)[:length].astype(np.uint8)


class RandTable:
    """
    View of the randomness table over (family, level, row, column) coordinates.

    Segments are materialized on first use and cached; contents never change.
    """

    def __init__(self, seed: BiasSeed, params: Params):
        # Lane widths travel with the seed; only the segment layout comes from params.
        specs, widths = lane_plan(params)
        if len(seed.lanes) != len(widths):
            raise ParameterError(f"seed has {len(seed.lanes)} lanes, parameters need {len(widths)}")
        self.seed = seed
        self.params = params
        self._specs: Dict[Tuple[str, int], LaneSpec] = {(s.family, s.level): s for s in specs}
        self._cache: Dict[Tuple[str, int], np.ndarray] = {}

    def has(self, family: str, level: int) -> bool:
        return (family, level) in self._specs

    def segment(self, family: str, level: int) -> np.ndarray:
        """Bit matrix (rows x cols) of one segment."""
        key = (family, level)
        if key not in self._cache:
            if key not in self._specs:
                raise ParameterError(f"table has no {family} segment for level {level}")
            spec = self._specs[key]
            logger.debug(f"materializing {family} segment level={level} bits={spec.length}")
            bits = lane_stream(self.seed.lanes[spec.lane], spec.start, spec.length)
            self._cache[key] = bits.reshape(spec.rows, spec.cols)
        return self._cache[key]

    def hash_rows(self, level: int) -> np.ndarray:
        return self.segment("hash", level)


def table_bit(table: RandTable, s: int, level: int, i: int) -> int:
    """R[s, level, i], the bit of the level's hash lane at linear index s*o + i."""
    params = table.params
    if not (0 <= s < params.n_pad and table.has("hash", level) and 0 <= i < params.o):
        raise ParameterError(f"table coordinate ({s}, {level}, {i}) out of range")
    return int(table.hash_rows(level)[s, i])


def entropy_size(params: Params) -> int:
    """Entropy bytes sample_seed consumes for these parameters."""
    _, widths = lane_plan(params)
    return sum((w + 7) // 8 for w in widths)
