import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from racetrack_ecc.ecc import (ConfigurationError, DecodeStatus, GF_ORDER, bch_generator,
                               berlekamp_massey, bits_to_int, gf_inv, gf_mul, int_to_bits,
                               make_scheme)

words = st.integers(0, 2 ** 64 - 1)


def poly_mod_oracle(a, m):
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def test_code_dimensions():
    assert [(make_scheme(t).n, make_scheme(t).r) for t in (1, 2, 3)] == [(72, 8), (78, 14), (85, 21)]
    with pytest.raises(ConfigurationError):
        make_scheme(4)


def test_bch_generators():
    assert bch_generator(2) == 0x4377
    assert bch_generator(3) == 0x26D9E3
    # g divides x^127 - 1
    assert poly_mod_oracle((1 << GF_ORDER) | 1, bch_generator(3)) == 0


def test_gf_field():
    for a in range(1, 128):
        assert gf_mul(a, gf_inv(a)) == 1


def test_secded_columns():
    h = make_scheme(1).parity_check
    cols = {bits_to_int(h[:, j]) for j in range(72)}
    assert len(cols) == 72
    assert all(h[:, j].sum() % 2 == 1 for j in range(72))


@pytest.mark.parametrize("t", [2, 3])
@settings(max_examples=60, deadline=None)
@given(value=words)
def test_bch_encoder_matches_polynomial_division(t, value):
    """Codeword bit b carries x^(r+b) for data, x^(b-k) for parity."""
    s = make_scheme(t)
    g = bch_generator(t)
    data_poly = value << s.r
    parity = poly_mod_oracle(data_poly, g)
    cw = s.encode(int_to_bits(value))
    assert bits_to_int(cw[s.k:]) == parity
    assert bits_to_int(cw[:s.k]) == value


@pytest.mark.parametrize("t", [1, 2, 3])
@settings(max_examples=60, deadline=None)
@given(a=words, b=words)
def test_xor_homomorphism(t, a, b):
    s = make_scheme(t)
    lhs = s.encode(int_to_bits(a)) ^ s.encode(int_to_bits(b))
    assert (lhs == s.encode(int_to_bits(a ^ b))).all()


@pytest.mark.parametrize("t", [1, 2, 3])
@settings(max_examples=80, deadline=None)
@given(value=words, data=st.data())
def test_corrects_up_to_t(t, value, data):
    s = make_scheme(t)
    pos = sorted(data.draw(st.sets(st.integers(0, s.n - 1), max_size=t)))
    cw = s.encode(int_to_bits(value))
    cw[pos] ^= 1
    assert s.locate(cw) == pos
    dec = s.decode(cw)
    assert bits_to_int(dec.data) == value
    assert dec.status is (DecodeStatus.CORRECTED if pos else DecodeStatus.CLEAN)


def test_secded_detects_all_doubles():
    s = make_scheme(1)
    cw = s.encode(int_to_bits(0x0123456789ABCDEF))
    for i, j in itertools.combinations(range(s.n), 2):
        bad = cw.copy()
        bad[[i, j]] ^= 1
        assert s.locate(bad) is None


def test_batch_encode_and_codewords():
    s = make_scheme(2)
    data = np.random.default_rng(0).integers(0, 2, (5, 64)).astype(np.uint8)
    cws = s.encode(data)
    assert cws.shape == (5, 78)
    assert all(s.is_codeword(c) for c in cws)
    assert s.overhead == pytest.approx(14 / 64)


def test_uncorrectable_status():
    s = make_scheme(1)
    cw = s.encode(int_to_bits(5))
    cw[[0, 1]] ^= 1
    assert s.decode(cw).status is DecodeStatus.UNCORRECTABLE


def test_berlekamp_massey_single_error():
    # one error at exponent e: S_j = alpha^(j e)
    from racetrack_ecc.ecc import gf_pow_alpha
    e = 11
    loc = berlekamp_massey([gf_pow_alpha(j * e) for j in range(1, 5)])
    assert len(loc) == 2 and loc[1] == gf_pow_alpha(e)


@given(words)
def test_bits_roundtrip(v):
    assert bits_to_int(int_to_bits(v)) == v
