import random

import pytest
from hypothesis import given, strategies as st

from lzero import _gf2_jit as jit
from lzero.gf2 import GF2_MODULI, GF2Field, UnsupportedField


def clmul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def polymod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, polymod(a, b)
    return a


def x_pow_2k_mod(k: int, m: int) -> int:
    """x^(2^k) mod m by repeated squaring."""
    r = 2
    for _ in range(k):
        r = polymod(clmul(r, r), m)
    return r


def prime_factors(n: int):
    out, p = set(), 2
    while p * p <= n:
        while n % p == 0:
            out.add(p)
            n //= p
        p += 1
    if n > 1:
        out.add(n)
    return out


@pytest.mark.parametrize("bits", sorted(GF2_MODULI))
def test_modulus_is_irreducible(bits):
    # Rabin's test
    m = (1 << bits) | GF2_MODULI[bits]
    assert x_pow_2k_mod(bits, m) == 2
    for q in prime_factors(bits):
        assert polygcd(m, x_pow_2k_mod(bits // q, m) ^ 2) == 1


def test_modulus_80_value():
    assert GF2_MODULI[80] == (1 << 9) | (1 << 4) | (1 << 2) | 1


@pytest.mark.parametrize("bits", [8, 32, 64, 80])
def test_mul_matches_schoolbook(bits):
    f = GF2Field(bits)
    rng = random.Random(bits)
    for _ in range(300):
        a, b = rng.getrandbits(bits), rng.getrandbits(bits)
        assert f.mul(a, b) == polymod(clmul(a, b), f.modulus)


def test_aes_field_known_product():
    # FIPS-197 worked example: {57} x {83} = {c1}
    assert GF2Field(8).mul(0x57, 0x83) == 0xC1


@given(st.integers(1, 2**80 - 1))
def test_inverse(x):
    f = GF2Field(80)
    assert f.mul(x, f.inv(x)) == 1


@given(st.integers(0, 2**80 - 1), st.integers(0, 2**80 - 1), st.integers(0, 2**80 - 1))
def test_distributive(a, b, c):
    f = GF2Field(80)
    assert f.mul(a, b ^ c) == f.mul(a, b) ^ f.mul(a, c)


@given(st.integers(1, 2**80 - 1), st.integers(0, 300))
def test_pow_matches_repeated_mul(x, e):
    f = GF2Field(80)
    acc = 1
    for _ in range(e):
        acc = f.mul(acc, x)
    assert f.pow(x, e) == acc


def test_unsupported_width():
    with pytest.raises(UnsupportedField):
        GF2Field(12)


def test_inverse_of_zero_rejected():
    with pytest.raises(ZeroDivisionError):
        GF2Field(80).inv(0)


@pytest.mark.parametrize("bits", [32, 64, 80, 96])
def test_compiled_kernel_agrees_with_reference(bits):
    from lzero.sketch import _fold, _from_words, _to_words

    f = GF2Field(bits)
    rng = random.Random(7 * bits)
    a = [rng.getrandbits(bits) for _ in range(200)]
    b = [rng.getrandbits(bits) for _ in range(200)]
    got = _from_words(jit.mul_many(_to_words(a), _to_words(b), bits, _fold(bits)))
    assert got == [f.mul(x, y) for x, y in zip(a, b)]
