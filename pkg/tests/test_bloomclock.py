import hashlib
import struct

import pytest
from hypothesis import given, strategies as st

from lzero.bloomclock import (
    COUNTER_MAX, BloomClock, Order, ParameterMismatch, clock_consistent, probes,
)

sets = st.sets(st.integers(1, 2**80 - 1), max_size=40)


def reference_probes(e, m, k, seed):
    d = hashlib.sha256(b"lzero-clock" + seed.to_bytes(4, "big") + e.to_bytes(16, "big")).digest()
    h1, h2 = int.from_bytes(d[:8], "big"), int.from_bytes(d[8:16], "big") | 1
    return [(h1 + i * h2) % m for i in range(k)]


def test_wire_size_is_68_bytes_at_32_cells():
    c = BloomClock.empty(32).add_many(range(1, 50))
    assert len(c.serialize()) == c.serialized_size() == 68


def test_wire_layout():
    c = BloomClock.empty(4, 2).add(9)
    data = c.serialize()
    assert data[:4] == struct.pack(">HBB", 4, 2, 0)
    assert sum(struct.unpack(">4H", data[4:])) == 2


def test_probes_match_reference():
    for e in (1, 77, 2**79 + 3):
        assert list(probes(e, 32, 3, 0)) == reference_probes(e, 32, 3, 0)
        assert list(probes(e, 32, 3, 5)) == reference_probes(e, 32, 3, 5)


def test_disjoint_probe_sets_are_concurrent():
    # two single elements whose probe cells do not overlap
    a = 1
    b = next(e for e in range(2, 1000) if not set(probes(e, 32, 3, 0)) & set(probes(a, 32, 3, 0)))
    ca, cb = BloomClock.empty().add(a), BloomClock.empty().add(b)
    assert ca.compare(cb) is Order.CONCURRENT
    assert not clock_consistent(ca, cb)


@given(sets, sets)
def test_superset_dominates(a, extra):
    small = BloomClock.empty().add_many(a)
    big = BloomClock.empty().add_many(a | extra)
    assert big.dominates_or_equals(small)
    assert clock_consistent(small, big)
    assert big.compare(small) in (Order.DOMINATES, Order.EQUAL)


@given(sets)
def test_cell_total_is_k_per_element(a):
    c = BloomClock.empty(32, 3).add_many(a)
    assert sum(c.cells) == 3 * len(a)


@given(sets)
def test_roundtrip(a):
    c = BloomClock.empty().add_many(a)
    assert BloomClock.deserialize(c.serialize()) == c


def test_saturation_flag_disables_the_test():
    base = BloomClock.empty(2, 1)
    full = BloomClock((COUNTER_MAX, COUNTER_MAX), 1).add(1)
    assert full.saturated and max(full.cells) == COUNTER_MAX
    assert BloomClock.deserialize(full.serialize()).saturated
    assert clock_consistent(full, base)


def test_parameter_mismatch():
    with pytest.raises(ParameterMismatch):
        BloomClock.empty(32).compare(BloomClock.empty(16))
    with pytest.raises(ParameterMismatch):
        clock_consistent(BloomClock.empty(32, 3, 0), BloomClock.empty(32, 3, 1))
