import struct
import zlib

import numpy as np
import pytest

from app.core.errors import (
    BadMagic,
    ChecksumMismatch,
    FormatError,
    LengthMismatch,
    ParameterError,
    Truncation,
    VersionMismatch,
)
from app.core.config import settings
from app.models.params import Scheme, derive_params
from app.services.sketch.codec import declared_size, deserialize, inspect_summary, serialize
from app.services.sketch.smallbias import entropy_size
from app.services.sketch.summary import build_summary, expand_entropy, padded_file


def alg1_summary(F: bytes, k: int = 2, seed: str = "01"):
    params = derive_params(8 * len(F), k, Scheme.ALG1_RANDOM)
    return build_summary(F, params, entropy=expand_entropy(seed, entropy_size(params)))


@pytest.fixture
def encoded(random_file):
    return serialize(alg1_summary(random_file))


def test_randomized_summary_is_a_function_of_its_entropy(random_file):
    assert alg1_summary(random_file) == alg1_summary(random_file)
    assert alg1_summary(random_file).seed != alg1_summary(random_file, seed="02").seed


def test_summary_layout(random_file):
    s = alg1_summary(random_file)
    params = s.params()
    assert len(s.payloads) == params.L
    assert len(s.level0) == params.block_count(0)
    assert all(0 <= d < (1 << params.o) for d in s.level0)
    assert len(s.final_check) == 8


def test_alg2_payloads_hold_the_verification_hash(random_file):
    params = derive_params(1024, 2, Scheme.ALG2_OPTIMAL)
    s = build_summary(random_file, params, entropy=expand_entropy("aa", entropy_size(params)))
    assert s.w == 0 and s.poly == 0
    used = params.identity_level()
    assert all(len(p) == params.verify_width // 8 for p in s.payloads[:used])
    assert all(p == b"" for p in s.payloads[used:])


def test_randomized_schemes_need_entropy(random_file):
    with pytest.raises(ParameterError):
        build_summary(random_file, derive_params(1024, 2, Scheme.ALG1_RANDOM))


def test_file_length_must_match_n(random_file):
    params = derive_params(1024, 2, Scheme.ALG1_RANDOM)
    with pytest.raises(ParameterError):
        padded_file(random_file[:-1], params)
    with pytest.raises(ParameterError):
        padded_file(np.zeros(1000, dtype=np.uint8), params)


def test_non_byte_lengths_are_padded_with_zeros():
    params = derive_params(1000, 2, Scheme.ALG1_RANDOM)
    F = padded_file(np.ones(1000, dtype=np.uint8), params)
    assert F.size == params.n_pad
    assert F[:1000].all() and not F[1000:].any()


def test_seed_hex_is_validated():
    with pytest.raises(ParameterError):
        expand_entropy("zz", 8)
    assert expand_entropy("00ff", 16) == expand_entropy("00ff", 16)
    assert len(expand_entropy(None, 16)) == 16


@pytest.mark.slow
def test_deterministic_summary_needs_no_entropy(random_file):
    params = derive_params(1024, 2, Scheme.DETERMINISTIC)
    first = build_summary(random_file, params)
    assert first == build_summary(random_file, params, threads=3)
    assert len(first.seed.lanes) == 1

    _, report = inspect_summary(serialize(first))
    assert report.lane_widths == [first.seed.lanes[0].width]
    assert report.enumeration_cap_bits == settings.ENUMERATION_CAP_BITS
    assert report.lane_widths[0] <= settings.ENUMERATION_CAP_BITS
    assert report.lane_clamped


def test_encoding_round_trips(random_file, encoded):
    assert deserialize(encoded) == alg1_summary(random_file)


def test_inspect_accounts_for_every_byte(encoded):
    _, report = inspect_summary(encoded)
    accounted = (
        report.header_bytes + report.seed_bytes + report.level0_bytes + sum(report.payload_bytes)
        + report.final_check_bytes + report.crc_bytes
    )
    assert accounted == report.total_bytes == len(encoded)
    assert declared_size(encoded + b"\x00" * 5) == len(encoded)


@pytest.mark.parametrize(
    "mangle, error",
    [
        (lambda b: b[:3], Truncation),
        (lambda b: b"DXS2" + b[4:], BadMagic),
        (lambda b: b[:4] + struct.pack("<H", 9) + b[6:], VersionMismatch),
        (lambda b: b[:20], Truncation),
        (lambda b: b[:-1], Truncation),
        (lambda b: b + b"\x00", LengthMismatch),
        (lambda b: b[:60] + bytes([b[60] ^ 1]) + b[61:], ChecksumMismatch),
        (lambda b: b[:-1] + bytes([b[-1] ^ 0x80]), ChecksumMismatch),
    ],
)
def test_malformed_bytes_are_rejected(encoded, mangle, error):
    with pytest.raises(error):
        deserialize(mangle(encoded))


def test_every_truncation_is_a_format_error(encoded):
    for cut in range(0, len(encoded), 7):
        with pytest.raises(FormatError):
            deserialize(encoded[:cut])


def test_levels_past_the_identity_level_carry_nothing(random_file):
    s = alg1_summary(random_file)
    params = s.params()
    top = params.identity_level()
    assert top < params.L
    assert all(len(p) > 0 for p in s.payloads[:top])
    assert all(p == b"" for p in s.payloads[top:])


def test_summary_records_the_constants_it_was_built_with(random_file, encoded):
    s = deserialize(encoded)
    assert (s.c, s.verify_multiplier, s.color_hash_bits, s.final_check_bits) == (
        settings.BIAS_CONSTANT, settings.VERIFY_MULTIPLIER, settings.COLOR_HASH_BITS, settings.FINAL_CHECK_BITS
    )
    _, report = inspect_summary(encoded)
    assert report.header_bytes == 34
    assert report.final_check_bits == settings.FINAL_CHECK_BITS
    assert report.lane_widths == [lane.width for lane in s.seed.lanes]
    assert report.enumeration_cap_bits is None and not report.lane_clamped


def test_out_of_range_constant_in_header_is_rejected(encoded):
    # c sits right after the u32 field polynomial
    body = encoded[:26] + b"\x00" + encoded[27:-4]
    forged = body + struct.pack("<I", zlib.crc32(body))
    with pytest.raises(LengthMismatch):
        deserialize(forged)
