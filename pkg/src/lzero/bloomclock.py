"""Bloom clock: a counting filter whose cell-wise order is a sound subset test.

Wire format (big-endian)::

    u16 m | u8 k | u8 flags | m x u16 cells

``flags`` bit 0 records counter saturation. The probe seed is a deployment
parameter and is not transmitted.
"""

import enum
import hashlib
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Tuple

COUNTER_MAX = 2**16 - 1
FLAG_SATURATED = 0x01


class ParameterMismatch(ValueError):
    pass


class Order(enum.Enum):
    EQUAL = "equal"
    DOMINATES = "dominates"  # left strictly above right
    DOMINATED = "dominated"  # right strictly above left
    CONCURRENT = "concurrent"


@lru_cache(maxsize=1 << 20)
def probes(element: int, m: int, k: int, seed: int) -> Tuple[int, ...]:
    """Probe cells via double hashing, h1 + i*h2 (mod m), with h2 odd."""
    d = hashlib.sha256(b"lzero-clock" + struct.pack(">I", seed) + element.to_bytes(16, "big")).digest()
    h1 = int.from_bytes(d[:8], "big")
    h2 = int.from_bytes(d[8:16], "big") | 1
    return tuple((h1 + i * h2) % m for i in range(k))


@dataclass(frozen=True)
class BloomClock:
    cells: Tuple[int, ...]
    k: int = 3
    seed: int = 0
    saturated: bool = False

    @classmethod
    def empty(cls, m: int = 32, k: int = 3, seed: int = 0) -> "BloomClock":
        if not 0 < m < 2**16 or not 0 < k < 256:
            raise ParameterMismatch(f"unsupported clock shape m={m} k={k}")
        return cls((0,) * m, k, seed)

    @property
    def m(self) -> int:
        return len(self.cells)

    def params(self) -> Tuple[int, int, int]:
        return (self.m, self.k, self.seed)

    def add(self, element: int) -> "BloomClock":
        return self.add_many((element,))

    def add_many(self, elements: Iterable[int]) -> "BloomClock":
        cells = list(self.cells)
        m, k, seed = self.m, self.k, self.seed
        for e in elements:
            for p in probes(e, m, k, seed):
                cells[p] += 1
        saturated = self.saturated
        if max(cells, default=0) > COUNTER_MAX:
            saturated = True
            cells = [min(c, COUNTER_MAX) for c in cells]
        return BloomClock(tuple(cells), k, seed, saturated)

    def compare(self, other: "BloomClock") -> Order:
        if self.params() != other.params():
            raise ParameterMismatch(f"{self.params()} vs {other.params()}")
        above = below = False
        for a, b in zip(self.cells, other.cells):
            if a > b:
                above = True
            elif a < b:
                below = True
        if above and below:
            return Order.CONCURRENT
        if above:
            return Order.DOMINATES
        if below:
            return Order.DOMINATED
        return Order.EQUAL

    def dominates_or_equals(self, other: "BloomClock") -> bool:
        if self.params() != other.params():
            raise ParameterMismatch(f"{self.params()} vs {other.params()}")
        return all(a >= b for a, b in zip(self.cells, other.cells))

    def serialize(self) -> bytes:
        flags = FLAG_SATURATED if self.saturated else 0
        return struct.pack(f">HBB{self.m}H", self.m, self.k, flags, *self.cells)

    def serialized_size(self) -> int:
        return 4 + 2 * self.m

    @classmethod
    def deserialize(cls, data: bytes, seed: int = 0) -> "BloomClock":
        if len(data) < 4:
            raise ValueError("truncated clock header")
        m, k, flags = struct.unpack_from(">HBB", data)
        if len(data) != 4 + 2 * m:
            raise ValueError(f"expected {4 + 2 * m} clock bytes, got {len(data)}")
        cells = struct.unpack_from(f">{m}H", data, 4)
        return cls(tuple(cells), k, seed, bool(flags & FLAG_SATURATED))


def clock_consistent(prev: BloomClock, nxt: BloomClock) -> bool:
    """Fast-path append-only check: True unless ``nxt`` provably lost an element.

    A saturated clock cannot prove anything, so it always reports True and
    leaves the decision to the checksum and sketch checks.
    """
    if prev.params() != nxt.params():
        raise ParameterMismatch(f"{prev.params()} vs {nxt.params()}")
    if prev.saturated or nxt.saturated:
        return True
    return nxt.dominates_or_equals(prev)
