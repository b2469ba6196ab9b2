from itertools import product

import galois
import numpy as np
import pytest

from app.core.errors import DecodeFailure, FieldMismatch, ParameterError
from app.services.coding.rsfield import (
    FieldElem,
    RsCode,
    field_polynomial,
    get_field,
    gf_mul,
    rs_decode,
    rs_encode_redundancy,
)


def test_product_in_gf16():
    assert gf_mul(FieldElem(value=0x3, w=4), FieldElem(value=0x5, w=4)) == FieldElem(value=0xF, w=4)


@pytest.mark.parametrize("w", [3, 8, 12, 16, 64])
def test_field_polynomial_is_irreducible_of_right_degree(w):
    poly = field_polynomial(w)
    assert poly.bit_length() - 1 == w
    assert galois.Poly.Int(poly).is_irreducible()


def test_field_inverse_and_distributivity():
    GF = get_field(8)
    a = GF([1, 2, 3, 87, 255])
    assert np.all(a * a ** -1 == 1)
    x, y, z = GF(19), GF(200), GF(77)
    assert x * (y + z) == x * y + x * z


def test_unsupported_degree():
    with pytest.raises(ParameterError):
        get_field(65)


def test_field_elements_reject_mixed_widths():
    with pytest.raises(FieldMismatch):
        gf_mul(FieldElem(value=3, w=8), FieldElem(value=3, w=12))
    with pytest.raises(ParameterError):
        FieldElem(value=256, w=8)


def test_code_length_bounded_by_field():
    with pytest.raises(ParameterError):
        RsCode(n_code=256, k_code=10, w=8)


def test_seven_three_code_is_mds():
    code = RsCode(n_code=7, k_code=3, w=3)
    weights = []
    for message in product(range(8), repeat=3):
        if not any(message):
            continue
        parity = rs_encode_redundancy(list(message), code)
        weights.append(np.count_nonzero(message) + np.count_nonzero(parity))
    assert min(weights) == code.r_code + 1


def test_clean_word_decodes_to_itself(rng):
    code = RsCode(n_code=40, k_code=30, w=8)
    message = rng.integers(0, 256, size=30)
    parity = rs_encode_redundancy(message, code)
    assert np.array_equal(rs_decode(message, parity, code), message)


@pytest.mark.parametrize("w", [8, 12])
def test_corrects_up_to_half_the_redundancy(rng, w):
    code = RsCode(n_code=60, k_code=40, w=w)
    message = rng.integers(0, 1 << w, size=40)
    parity = rs_encode_redundancy(message, code)
    received = message.copy()
    for i in rng.choice(40, size=10, replace=False):
        received[i] ^= int(rng.integers(1, 1 << w))
    assert np.array_equal(rs_decode(received, parity, code), message)


def test_corrupted_parity_is_corrected_too(rng):
    code = RsCode(n_code=20, k_code=12, w=8)
    message = rng.integers(0, 256, size=12)
    parity = rs_encode_redundancy(message, code).copy()
    parity[0] ^= 1
    received = message.copy()
    received[3] ^= 9
    assert np.array_equal(rs_decode(received, parity, code), message)


def test_symbol_range_checked():
    code = RsCode(n_code=10, k_code=6, w=8)
    with pytest.raises(ParameterError):
        rs_encode_redundancy([0, 1, 2, 3, 4, 300], code)


def test_too_many_errors_never_return_the_original(rng):
    code = RsCode(n_code=14, k_code=10, w=8)
    message = rng.integers(0, 256, size=10)
    parity = rs_encode_redundancy(message, code)
    received = message.copy()
    received[:6] ^= 0x5A
    try:
        decoded = rs_decode(received, parity, code)
    except DecodeFailure:
        return
    assert not np.array_equal(decoded, message)


@pytest.mark.slow
@pytest.mark.parametrize("w, k_code, r_code, trials", [(8, 200, 52, 3400), (12, 1000, 104, 3300), (16, 600, 208, 3300)])
def test_random_round_trips_at_the_correction_radius(w, k_code, r_code, trials):
    rng = np.random.default_rng(w)
    code = RsCode(n_code=k_code + r_code, k_code=k_code, w=w)
    radius = r_code // 2
    for _ in range(trials):
        message = rng.integers(0, 1 << w, size=k_code)
        parity = rs_encode_redundancy(message, code)
        word = np.concatenate([message, parity])
        spots = rng.choice(code.n_code, size=radius, replace=False)
        word[spots] ^= rng.integers(1, 1 << w, size=radius)
        assert np.array_equal(rs_decode(word[:k_code], word[k_code:], code), message)
