"""Arithmetic in GF(2^b) with elements represented as Python integers.

This is the straightforward reference implementation. The sketch decoder
uses the compiled kernels in :mod:`lzero._gf2_jit`, which must agree with
this module bit for bit.
"""

from typing import Dict

# Irreducible polynomials, x^b + x^a + x^c + x^d + 1, stored without the x^b
# term. Minimal number of nonzero coefficients, ties broken by the smallest
# highest middle exponent (the same convention libminisketch uses).
GF2_MODULI: Dict[int, int] = {
    8: 2**4 + 2**3 + 2**1 + 1,
    16: 2**5 + 2**3 + 2**1 + 1,
    24: 2**4 + 2**3 + 2**1 + 1,
    32: 2**7 + 2**3 + 2**2 + 1,
    40: 2**5 + 2**4 + 2**3 + 1,
    48: 2**5 + 2**3 + 2**2 + 1,
    56: 2**7 + 2**4 + 2**2 + 1,
    64: 2**4 + 2**3 + 2**1 + 1,
    72: 2**10 + 2**9 + 2**3 + 1,
    80: 2**9 + 2**4 + 2**2 + 1,
    96: 2**10 + 2**9 + 2**6 + 1,
}


class UnsupportedField(ValueError):
    pass


class GF2Field:
    """GF(2^bits) with a fixed modulus. Addition is xor and not exposed."""

    def __init__(self, bits: int):
        if bits not in GF2_MODULI:
            raise UnsupportedField(f"no modulus for GF(2^{bits})")
        self.bits = bits
        self.low_modulus = GF2_MODULI[bits]
        self.modulus = (1 << bits) | self.low_modulus
        self.mask = (1 << bits) - 1

    def __repr__(self) -> str:
        return f"GF2Field({self.bits})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GF2Field) and other.bits == self.bits

    def __hash__(self) -> int:
        return hash(("GF2Field", self.bits))

    def mul(self, x: int, y: int) -> int:
        ret = 0
        top = 1 << self.bits
        while y:
            if y & 1:
                ret ^= x
            y >>= 1
            x <<= 1
            if x & top:
                x ^= self.modulus
        return ret

    def sqr(self, x: int) -> int:
        return self.mul(x, x)

    def pow(self, x: int, e: int) -> int:
        ret = 1
        while e:
            if e & 1:
                ret = self.mul(ret, x)
            x = self.sqr(x)
            e >>= 1
        return ret

    def inv(self, x: int) -> int:
        if x == 0:
            raise ZeroDivisionError("zero has no inverse")
        # Extended Euclid over GF(2)[x] on (modulus, x).
        t1, t2 = 0, 1
        r1, r2 = self.modulus, x
        while r2:
            q = r1.bit_length() - r2.bit_length()
            if q < 0:
                r1, r2, t1, t2 = r2, r1, t2, t1
                continue
            r1 ^= r2 << q
            t1 ^= t2 << q
        assert r1 == 1
        return self._reduce(t1)

    def _reduce(self, x: int) -> int:
        while x.bit_length() > self.bits:
            x ^= self.modulus << (x.bit_length() - 1 - self.bits)
        return x
