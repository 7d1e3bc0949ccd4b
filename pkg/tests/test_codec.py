import random

import pytest

from screenmark import codec


# --- independent oracles -----------------------------------------------

def oracle_parity(payload_bits):
    """Brute-force polynomial long division over GF(2) with explicit bit
    lists, independent of the integer arithmetic in the implementation."""
    g = [(codec._GEN >> i) & 1 for i in range(codec._GEN.bit_length())][::-1]
    work = list(payload_bits) + [0] * codec.PARITY_BITS
    for i in range(len(payload_bits)):
        if work[i]:
            for j, gb in enumerate(g):
                work[i + j] ^= gb
    return work[-codec.PARITY_BITS:]


def hamming(a, b):
    return sum(x != y for x, y in zip(a, b))


def rand_payload(rng):
    return [rng.randint(0, 1) for _ in range(32)]


# --- encoding ------------------------------------------------------------

def test_all_zero_payload_gives_all_zero_codeword():
    assert codec.bch_encode([0] * 32) == [0] * 50


def test_parity_matches_long_division_oracle():
    rng = random.Random(1)
    payloads = [[0] * 31 + [1]] + [rand_payload(rng) for _ in range(50)]
    for p in payloads:
        cw = codec.bch_encode(p)
        assert cw[:32] == p, "systematic: payload appears verbatim"
        assert cw[32:] == oracle_parity(p)


def test_linearity():
    rng = random.Random(2)
    for _ in range(30):
        a, b = rand_payload(rng), rand_payload(rng)
        ca, cb = codec.bch_encode(a), codec.bch_encode(b)
        cab = codec.bch_encode([x ^ y for x, y in zip(a, b)])
        assert cab == [x ^ y for x, y in zip(ca, cb)]


def test_encode_rejects_wrong_length():
    with pytest.raises(ValueError):
        codec.bch_encode([0] * 31)
    with pytest.raises(ValueError):
        codec.bch_encode([0, 2] * 16)


# --- decoding ------------------------------------------------------------

def test_roundtrip_no_errors():
    rng = random.Random(3)
    for _ in range(100):
        p = rand_payload(rng)
        assert codec.bch_decode(codec.bch_encode(p)) == (p, 0)


def test_corrects_up_to_three_errors():
    rng = random.Random(4)
    for _ in range(40):
        p = rand_payload(rng)
        cw = codec.bch_encode(p)
        for w in (1, 2, 3):
            for _ in range(10):
                r = cw[:]
                for i in rng.sample(range(50), w):
                    r[i] ^= 1
                assert codec.bch_decode(r) == (p, w)


def test_beyond_three_errors_fails_or_miscorrects():
    """Distance-7 code: 7 flips land at least distance 4 from the original
    codeword, so the decoder must never return it."""
    rng = random.Random(5)
    for _ in range(100):
        p = rand_payload(rng)
        r = codec.bch_encode(p)
        for i in rng.sample(range(50), 7):
            r[i] ^= 1
        try:
            got, n = codec.bch_decode(r)
            assert got != p  # miscorrection to some *other* codeword
            assert hamming(codec.bch_encode(got), r) == n <= 3
        except codec.DecodeFailure:
            pass


def test_decode_rejects_wrong_length():
    with pytest.raises(ValueError):
        codec.bch_decode([0] * 49)


# --- identity packing -----------------------------------------------------

def test_identity_roundtrip():
    assert codec.pack_identity(codec.IdentityFields(0, 0, 0, 0)) == [0] * 32
    f = codec.IdentityFields(1, 1, 1, 1)
    assert codec.unpack_identity(codec.pack_identity(f)) == f
    rng = random.Random(6)
    for _ in range(100):
        f = codec.IdentityFields(rng.randrange(256), rng.randrange(4096),
                                 rng.randrange(256), rng.randrange(16))
        assert codec.unpack_identity(codec.pack_identity(f)) == f


def test_identity_field_order_is_big_endian():
    bits = codec.pack_identity(codec.IdentityFields(0x80, 0, 0, 1))
    assert bits[0] == 1 and bits[31] == 1 and sum(bits) == 2


def test_identity_range_errors():
    with pytest.raises(ValueError):
        codec.IdentityFields(0, 4096, 0, 0)
    with pytest.raises(ValueError):
        codec.IdentityFields(-1, 0, 0, 0)


# --- hex serialization ----------------------------------------------------

def test_hex_roundtrip():
    assert codec.bits_to_hex(codec.hex_to_bits("DEADBEEF", 32)) == "DEADBEEF"
    cw = codec.bch_encode(codec.hex_to_bits("DEADBEEF", 32))
    h = codec.bits_to_hex(cw)
    assert len(h) == 13
    assert codec.hex_to_bits(h, 50) == cw


def test_hex_rejects_oversized_value():
    with pytest.raises(ValueError):
        codec.hex_to_bits("1FFFFFFFF", 32)
