import random

import pytest
from hypothesis import given, settings, strategies as st

from lzero.gf2 import GF2Field
from lzero.oracle_sketch import ElementRegistry, OracleSketch
from lzero.sketch import CapacityMismatch, FieldMismatch, LengthMismatch, Sketch, SketchError

elements = st.integers(1, 2**80 - 1)


def test_odd_power_syndromes_by_hand():
    # capacity 2 stores (sum e, sum e^3)
    f = GF2Field(80)
    xs = [0x1234, 0xABCDEF0123, 2**79 + 5]
    s = Sketch.from_elements(xs, 2)
    s1 = s3 = 0
    for x in xs:
        s1 ^= x
        s3 ^= f.mul(x, f.mul(x, x))
    assert s.syndromes == [s1, s3]


def test_serialized_size_default():
    s = Sketch(100, 80)
    assert s.serialized_size() == 1000
    assert len(s.serialize()) == 1000


def test_serialize_roundtrip():
    s = Sketch.from_elements([5, 17, 2**70], 8)
    assert Sketch.deserialize(s.serialize(), 8) == s
    with pytest.raises(LengthMismatch):
        Sketch.deserialize(b"\0" * 79, 8)


def test_rejects_bad_elements_and_mismatches():
    s = Sketch(4)
    with pytest.raises(SketchError):
        s.add(0)
    with pytest.raises(SketchError):
        s.add(2**80)
    with pytest.raises(CapacityMismatch):
        s.merge(Sketch(5))
    with pytest.raises(FieldMismatch):
        s.merge(Sketch(4, 64))


def test_overfull_sketch_fails_to_decode():
    rng = random.Random(3)
    fails = 0
    for _ in range(50):
        xs = {rng.getrandbits(80) | 1 for _ in range(12)}
        fails += Sketch.from_elements(xs, 8).decode() is None
    assert fails == 50


def test_empty_decodes_to_empty():
    assert Sketch(8).decode() == set()


@settings(max_examples=60, deadline=None)
@given(st.sets(elements, max_size=24), st.sets(elements, max_size=24))
def test_merge_decodes_symmetric_difference(a, b):
    diff = a ^ b
    sa, sb = Sketch.from_elements(a, 16), Sketch.from_elements(b, 16)
    got = sa.merge(sb).decode()
    if len(diff) <= 16:
        assert got == diff
    else:
        assert got is None or got == diff


@settings(max_examples=40, deadline=None)
@given(st.sets(elements, max_size=30), st.sets(elements, max_size=30))
def test_merge_is_linear(a, b):
    lhs = Sketch.from_elements(a, 8).merge(Sketch.from_elements(b, 8))
    assert lhs == Sketch.from_elements(a ^ b, 8)


@settings(max_examples=40, deadline=None)
@given(st.lists(elements, min_size=1, max_size=20))
def test_adding_twice_cancels(xs):
    s = Sketch(4)
    s.add_many(xs)
    s.add_many(xs)
    assert s.is_empty()


@pytest.mark.parametrize("bits", [32, 64])
def test_other_field_widths(bits):
    rng = random.Random(bits)
    xs = {rng.getrandbits(bits) or 1 for _ in range(10)}
    assert Sketch.from_elements(xs, 10, bits).decode() == xs


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(1, 10**6), max_size=40), st.sets(st.integers(1, 10**6), max_size=40))
def test_oracle_sketch_agrees_with_exact(a, b):
    reg = ElementRegistry()
    cap = 20
    exact = Sketch.from_elements(a, cap).merge(Sketch.from_elements(b, cap)).decode()
    oracle = OracleSketch.from_elements(a, cap, 80, reg).merge(OracleSketch.from_elements(b, cap, 80, reg))
    if len(a ^ b) <= cap:
        assert oracle.decode() == exact == a ^ b
        assert oracle.decoded_size() == len(a ^ b)
    else:
        assert oracle.decode() is None
    assert len(oracle.serialize()) == oracle.serialized_size() == cap * 10


def test_oracle_restricted():
    reg = ElementRegistry()
    s = OracleSketch.from_elements(range(1, 11), 100, 80, reg)
    assert s.restricted(lambda e: e % 2 == 0).decode() == {2, 4, 6, 8, 10}
