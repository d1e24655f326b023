"""Committed vectors match regeneration and independent recomputation."""

import hashlib
import json
import os
import struct

from lzero import vectors
from lzero.gf2 import GF2_MODULI
from lzero.sketch import Sketch

HERE = os.path.join(os.path.dirname(__file__), "vectors")


def load(name):
    with open(os.path.join(HERE, name)) as f:
        return json.load(f)


def clmul_mod(x, y, bits):
    m = (1 << bits) | GF2_MODULI[bits]
    r = 0
    for i in range(bits):
        if (y >> i) & 1:
            r ^= x << i
    for i in range(2 * bits - 2, bits - 1, -1):
        if (r >> i) & 1:
            r ^= m << (i - bits)
    return r


def test_committed_vectors_are_current():
    assert vectors.check(HERE) == []


def test_sketch_vectors_independently():
    for case in load("sketch.json"):
        bits, cap = case["field_bits"], case["capacity"]
        width = bits // 8
        for name in ("a", "b"):
            xs = [int(h, 16) for h in case[name]]
            raw = bytes.fromhex(case["sketch_" + name])
            got = [int.from_bytes(raw[i * width:(i + 1) * width], "big") for i in range(cap)]
            want = [0] * cap
            for x in xs:
                x2 = clmul_mod(x, x, bits)
                p = x
                for j in range(cap):
                    want[j] ^= p
                    p = clmul_mod(p, x2, bits)
            assert got == want
        a = Sketch.deserialize(bytes.fromhex(case["sketch_a"]), cap, bits)
        b = Sketch.deserialize(bytes.fromhex(case["sketch_b"]), cap, bits)
        assert sorted(a.merge(b).decode()) == [int(h, 16) for h in case["difference"]]


def test_clock_vectors_independently():
    for case in load("bloomclock.json"):
        m, k, seed = case["m"], case["k"], case["seed"]
        cells = [0] * m
        for h in case["elements"]:
            d = hashlib.sha256(b"lzero-clock" + seed.to_bytes(4, "big") + int(h, 16).to_bytes(16, "big")).digest()
            h1 = int.from_bytes(d[:8], "big")
            h2 = int.from_bytes(d[8:16], "big") | 1
            for i in range(k):
                cells[(h1 + i * h2) % m] += 1
        assert bytes.fromhex(case["serialized"]) == struct.pack(f">HBB{m}H", m, k, 0, *cells)


def test_shuffle_vectors_independently():
    for case in load("shuffle.json"):
        prev = bytes.fromhex(case["prev_hash"])
        seed = hashlib.sha256(prev + case["bundle_index"].to_bytes(8, "big")).digest()
        assert seed.hex() == case["seed"]
        a = list(range(case["n"]))
        words = []
        ctr = 0
        for i in range(len(a) - 1, 0, -1):
            n = i + 1
            while True:
                if not words:
                    d = hashlib.sha256(seed + ctr.to_bytes(8, "big")).digest()
                    ctr += 1
                    words = [int.from_bytes(d[j:j + 8], "big") for j in range(0, 32, 8)]
                r = words.pop(0)
                if r < 2**64 - 2**64 % n:
                    break
            j = r % n
            a[i], a[j] = a[j], a[i]
        assert a == case["permutation"]
