"""Payload packing and BCH error correction for 50-bit watermark messages.

A 32-bit identity payload is protected by 18 parity bits of a shortened
binary BCH code, giving a 50-bit message that survives up to 3 bit errors.
The underlying code is the narrow-sense BCH(63,45) over GF(2^6) with
designed distance 7, shortened by 13 (always-zero leading information
positions) to (50,32).
"""

from __future__ import annotations

from dataclasses import dataclass

PAYLOAD_BITS = 32
MESSAGE_BITS = 50
PARITY_BITS = MESSAGE_BITS - PAYLOAD_BITS  # 18

_N_FULL = 63          # full BCH length
_K_FULL = 45          # full BCH dimension
_SHORTEN = _N_FULL - MESSAGE_BITS  # 13 dropped leading info positions
_T = 3                # correctable errors

# GF(2^6) generated by x^6 + x + 1
_PRIM_POLY = 0b1000011
_GF_SIZE = 64


class DecodeFailure(Exception):
    """Raised when no codeword lies within Hamming distance 3 of the input."""


def _build_gf_tables():
    exp = [0] * (_GF_SIZE * 2)
    log = [0] * _GF_SIZE
    x = 1
    for i in range(_GF_SIZE - 1):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & _GF_SIZE:
            x ^= _PRIM_POLY
    for i in range(_GF_SIZE - 1, 2 * _GF_SIZE):
        exp[i] = exp[i - (_GF_SIZE - 1)]
    return exp, log


_EXP, _LOG = _build_gf_tables()


def _gf_mul(a, b):
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def _gf_inv(a):
    return _EXP[_GF_SIZE - 1 - _LOG[a]]


def _minimal_poly(alpha_power):
    """Minimal polynomial of alpha^i over GF(2), as an int bit mask."""
    # collect the conjugacy class {i, 2i, 4i, ...} mod 63
    cls = set()
    j = alpha_power
    while j not in cls:
        cls.add(j)
        j = (j * 2) % (_GF_SIZE - 1)
    # product of (x - alpha^j); coefficients live in GF(64) but end up in {0,1}
    poly = [1]
    for j in cls:
        root = _EXP[j]
        nxt = [0] * (len(poly) + 1)
        for d, coef in enumerate(poly):
            nxt[d] ^= _gf_mul(coef, root)
            nxt[d + 1] ^= coef
        poly = nxt
    mask = 0
    for d, coef in enumerate(poly):
        assert coef in (0, 1)
        mask |= coef << d
    return mask


def _poly_mul_gf2(a, b):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _gen_poly():
    """Generator of narrow-sense BCH(63,45): lcm of min polys of a, a^3, a^5."""
    g = 1
    seen = set()
    for i in (1, 3, 5):
        m = _minimal_poly(i)
        if m not in seen:
            seen.add(m)
            g = _poly_mul_gf2(g, m)
    return g


_GEN = _gen_poly()
assert _GEN.bit_length() - 1 == PARITY_BITS


def _check_bits(bits, n, what):
    bits = [int(b) for b in bits]
    if len(bits) != n:
        raise ValueError(f"{what} must have exactly {n} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"{what} bits must be 0 or 1")
    return bits


def bch_encode(payload):
    """Encode a 32-bit payload into a systematic 50-bit codeword.

    The payload bits appear verbatim in positions 0..31, followed by 18
    parity bits (the remainder of polynomial division by the generator).
    """
    bits = _check_bits(payload, PAYLOAD_BITS, "payload")
    # bit i of the message is the coefficient of x^(49 - i)
    msg = 0
    for b in bits:
        msg = (msg << 1) | b
    rem = msg << PARITY_BITS
    for shift in range(rem.bit_length() - 1, PARITY_BITS - 1, -1):
        if rem >> shift & 1:
            rem ^= _GEN << (shift - PARITY_BITS)
    return bits + [(rem >> (PARITY_BITS - 1 - i)) & 1 for i in range(PARITY_BITS)]


def _syndromes(word_poly_bits):
    """Evaluate the received polynomial at alpha^1..alpha^6.

    word_poly_bits[i] is the coefficient of x^(62 - i) in the full-length
    (unshortened) received word.
    """
    syn = []
    for j in range(1, 2 * _T + 1):
        s = 0
        for i, b in enumerate(word_poly_bits):
            if b:
                s ^= _EXP[(j * (_N_FULL - 1 - i)) % (_GF_SIZE - 1)]
        syn.append(s)
    return syn


def _berlekamp_massey(syn):
    """Error-locator polynomial (list of coefficients, sigma[0]=1)."""
    sigma = [1]
    prev = [1]
    L = 0
    m = 1
    b = 1
    for n in range(len(syn)):
        d = syn[n]
        for i in range(1, L + 1):
            d ^= _gf_mul(sigma[i], syn[n - i])
        if d == 0:
            m += 1
        elif 2 * L <= n:
            tmp = sigma[:]
            coef = _gf_mul(d, _gf_inv(b))
            shifted = [0] * m + prev
            sigma = sigma + [0] * (len(shifted) - len(sigma))
            for i, c in enumerate(shifted):
                sigma[i] ^= _gf_mul(coef, c)
            L = n + 1 - L
            prev = tmp
            b = d
            m = 1
        else:
            coef = _gf_mul(d, _gf_inv(b))
            shifted = [0] * m + prev
            sigma = sigma + [0] * max(0, len(shifted) - len(sigma))
            for i, c in enumerate(shifted):
                sigma[i] ^= _gf_mul(coef, c)
            m += 1
    while sigma and sigma[-1] == 0:
        sigma.pop()
    return sigma, L


def bch_decode(word):
    """Decode a 50-bit word, correcting up to 3 bit errors.

    Returns ``(payload_bits, corrections)``. Bounded-distance decoding:
    words more than 3 flips away from every codeword either raise
    :class:`DecodeFailure` or miscorrect to a different nearby codeword —
    no guarantee is made beyond distance 3.
    """
    bits = _check_bits(word, MESSAGE_BITS, "codeword")
    full = [0] * _SHORTEN + bits  # re-insert the shortened zero positions
    syn = _syndromes(full)
    if not any(syn):
        return bits[:PAYLOAD_BITS], 0
    sigma, n_err = _berlekamp_massey(syn)
    if n_err > _T or len(sigma) - 1 != n_err:
        raise DecodeFailure("more than 3 errors detected")
    # Chien search: position i (coefficient of x^(62-i)) is in error when
    # sigma(alpha^{-(62-i)}) = 0
    err_pos = []
    for i in range(_N_FULL):
        xinv = _EXP[(i + 1) % (_GF_SIZE - 1)]  # alpha^{-(62 - i)}
        acc = 0
        xp = 1
        for coef in sigma:
            acc ^= _gf_mul(coef, xp)
            xp = _gf_mul(xp, xinv)
        if acc == 0:
            err_pos.append(i)
    if len(err_pos) != n_err:
        raise DecodeFailure("error locator has no valid root set")
    if any(p < _SHORTEN for p in err_pos):
        # an "error" in an always-zero shortened position: not a valid
        # correction of any transmitted word
        raise DecodeFailure("correction falls outside the shortened code")
    for p in err_pos:
        full[p] ^= 1
    corrected = full[_SHORTEN:]
    # sanity: the corrected word must be a codeword
    if corrected != bch_encode(corrected[:PAYLOAD_BITS]):
        raise DecodeFailure("correction did not yield a valid codeword")
    return corrected[:PAYLOAD_BITS], n_err


@dataclass(frozen=True)
class IdentityFields:
    """Who/where/when identity packed into the 32-bit payload."""

    org_unit: int   # 8 bits
    user_id: int    # 12 bits
    device_id: int  # 8 bits
    time_bucket: int  # 4 bits

    _WIDTHS = (("org_unit", 8), ("user_id", 12), ("device_id", 8), ("time_bucket", 4))

    def __post_init__(self):
        for name, width in self._WIDTHS:
            v = getattr(self, name)
            if not 0 <= v < (1 << width):
                raise ValueError(f"{name}={v} out of range for {width} bits")


def pack_identity(fields: IdentityFields):
    """Pack identity fields into a 32-bit payload, big-endian field order."""
    bits = []
    for name, width in IdentityFields._WIDTHS:
        v = getattr(fields, name)
        bits.extend((v >> (width - 1 - i)) & 1 for i in range(width))
    return bits


def unpack_identity(payload) -> IdentityFields:
    bits = _check_bits(payload, PAYLOAD_BITS, "payload")
    values = {}
    pos = 0
    for name, width in IdentityFields._WIDTHS:
        v = 0
        for _ in range(width):
            v = (v << 1) | bits[pos]
            pos += 1
        values[name] = v
    return IdentityFields(**values)


def bits_to_hex(bits):
    """Big-endian hex string; bit count padded to a nibble boundary with
    leading zeros (a 50-bit codeword becomes 13 hex digits)."""
    bits = list(bits)
    ndigits = (len(bits) + 3) // 4
    v = 0
    for b in bits:
        v = (v << 1) | b
    return format(v, f"0{ndigits}X")


def hex_to_bits(s, nbits):
    v = int(s, 16)
    if v >= (1 << nbits):
        raise ValueError(f"hex value {s!r} does not fit in {nbits} bits")
    return [(v >> (nbits - 1 - i)) & 1 for i in range(nbits)]
